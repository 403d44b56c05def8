use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::{coeff_matrix, coeff_sqrt, CoeffMatrix};
use crate::error::{Error, Result};
use crate::field::{PlanarField, Point2};
use crate::helix::Pitch;

/// Number of points on circles used by the boundary quadratures.
pub const CIRCLE_POINTS: usize = 256;

/// `u(X) = ψ(X₀ + K^{1/2}(X₀) X)`.
#[derive(Debug, Clone)]
pub struct RectifiedField<F> {
    pub field: F,
    pub center: Point2,
    pub sqrt_k: CoeffMatrix,
}

impl<F: PlanarField> PlanarField for RectifiedField<F> {
    fn value(&self, p: Point2) -> Option<f64> {
        self.field.value(self.center + self.sqrt_k.apply(p))
    }
    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        let g = self.field.gradient(self.center + self.sqrt_k.apply(p))?;
        let r = self.sqrt_k.apply(Point2::new(g[0], g[1]));
        Some([r.x, r.y])
    }
}

/// Freezes the coefficients at `x0` and straightens the operator to the Laplacian.
pub fn freeze_and_rectify<F: PlanarField>(field: F, x0: Point2, pitch: Pitch) -> RectifiedField<F> {
    RectifiedField {
        field,
        center: x0,
        sqrt_k: coeff_sqrt(x0, pitch).0,
    }
}

/// Largest radius (up to `r_max`, resolved to `tol`) whose closed disc the field covers.
pub fn supported_radius(field: &impl PlanarField, center: Point2, r_max: f64, tol: f64) -> f64 {
    let covers = |r: f64| {
        (1..=16).all(|i| {
            let rho = r * i as f64 / 16.0;
            (0..CIRCLE_POINTS).all(|j| {
                let p = center + Point2::from_angle(TAU * j as f64 / CIRCLE_POINTS as f64) * rho;
                field.value(p).is_some()
            })
        }) && field.value(center).is_some()
    };
    if covers(r_max) {
        return r_max;
    }
    let (mut lo, mut hi) = (0.0, r_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if covers(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `ψ_r(X) = field(X₀ + rX) / r`.
#[derive(Debug, Clone)]
pub struct BlowUp<F> {
    pub field: F,
    pub center: Point2,
    pub radius: f64,
}

impl<F: PlanarField> PlanarField for BlowUp<F> {
    fn value(&self, p: Point2) -> Option<f64> {
        Some(self.field.value(self.center + p * self.radius)? / self.radius)
    }
    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        self.field.gradient(self.center + p * self.radius)
    }
}

/// Rescales `field` about `x0`; fails if `B_r(x0)` leaves the field's domain.
pub fn blowup_rescale<F: PlanarField>(field: F, x0: Point2, r: f64) -> Result<BlowUp<F>> {
    if !(r > 0.0) {
        return Err(Error::Config("blow-up radius must be positive".into()));
    }
    let b = BlowUp {
        field,
        center: x0,
        radius: r,
    };
    if supported_radius(&b, Point2::new(0.0, 0.0), 1.0, 1e-3) < 1.0 {
        return Err(Error::OutOfDomain { x: x0.x, y: x0.y });
    }
    Ok(b)
}

/// Dyadic radii `r_max, r_max/2, …` down to `r_min`.
pub fn dyadic_radii(r_max: f64, r_min: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) && r > 0.0 {
        out.push(r);
        r *= 0.5;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatnessOptions {
    pub radial: usize,
    pub angular: usize,
    pub coarse: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FlatnessOptions {
    fn default() -> Self {
        Self {
            radial: 32,
            angular: 128,
            coarse: 64,
            restarts: 3,
            tolerance: 1e-6,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatnessResult {
    pub deficit: f64,
    /// Unit direction `ν₀` of the best half-plane `λ (K^{-1/2}X·ν₀)⁺`.
    pub normal: Point2,
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `min_ν sup_{B₁} |ψ_r(X) − λ(K^{-1/2}X·ν)⁺| / λ` over a polar lattice.
pub fn flatness_deficit(
    field: &impl PlanarField,
    k_inv_sqrt: CoeffMatrix,
    lambda: f64,
    opts: &FlatnessOptions,
) -> Result<FlatnessResult> {
    let mut samples: Vec<(Point2, f64)> = Vec::with_capacity(opts.radial * opts.angular + 1);
    let origin = Point2::new(0.0, 0.0);
    let v0 = field.value(origin).ok_or(Error::OutOfDomain { x: 0.0, y: 0.0 })?;
    samples.push((origin, v0));
    for i in 1..=opts.radial {
        let rho = i as f64 / opts.radial as f64;
        for j in 0..opts.angular {
            let p = Point2::from_angle(TAU * j as f64 / opts.angular as f64) * rho;
            let v = field.value(p).ok_or(Error::OutOfDomain { x: p.x, y: p.y })?;
            samples.push((k_inv_sqrt.apply(p), v));
        }
    }
    let objective = |theta: f64| {
        let nu = Point2::from_angle(theta);
        samples
            .iter()
            .map(|&(q, v)| (v - lambda * q.dot(nu).max(0.0)).abs())
            .fold(0.0, f64::max)
            / lambda
    };
    let width = TAU / opts.coarse as f64;
    let (mut best_theta, mut best) = (0.0, f64::INFINITY);
    for j in 0..opts.coarse {
        let th = width * j as f64;
        let v = objective(th);
        if v < best {
            best = v;
            best_theta = th;
        }
    }
    let mut starts = vec![best_theta];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(best_theta + rng.gen_range(-width..width));
    }
    for s in starts {
        let (th, v) = golden_section(&objective, s - width, s + width, opts.tolerance);
        if v < best {
            best = v;
            best_theta = th;
        }
    }
    let theta = (best_theta + PI).rem_euclid(TAU) - PI;
    Ok(FlatnessResult {
        deficit: best,
        normal: Point2::from_angle(theta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub center: Point2,
    pub radii: Vec<f64>,
    pub deficits: Vec<f64>,
    pub normals: Vec<Point2>,
}

/// Blow-up flatness of `field` about the free boundary point `x0` for each radius.
pub fn flatness_profile<F: PlanarField + Clone>(
    field: &F,
    x0: Point2,
    pitch: Pitch,
    lambda: f64,
    radii: &[f64],
    opts: &FlatnessOptions,
) -> Result<FlatnessReport> {
    let k_inv = coeff_sqrt(x0, pitch).1;
    let mut deficits = Vec::with_capacity(radii.len());
    let mut normals = Vec::with_capacity(radii.len());
    for &r in radii {
        let b = BlowUp {
            field: field.clone(),
            center: x0,
            radius: r,
        };
        let res = flatness_deficit(&b, k_inv, lambda, opts)?;
        deficits.push(res.deficit);
        normals.push(res.normal);
    }
    Ok(FlatnessReport {
        center: x0,
        radii: radii.to_vec(),
        deficits,
        normals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeissProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl WeissProfile {
    /// Smallest `C` with `W(r₂) ≥ W(r₁) − C·r₂` for all tested `r₁ < r₂`.
    pub fn almost_monotonicity_constant(&self) -> f64 {
        let mut c: f64 = 0.0;
        for a in 0..self.radii.len() {
            for b in 0..self.radii.len() {
                if self.radii[a] < self.radii[b] {
                    c = c.max((self.values[a] - self.values[b]) / self.radii[b]);
                }
            }
        }
        c
    }

    pub fn spread(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Number of rings of the midpoint rule in the radial direction.
pub const WEISS_RINGS: usize = 64;
const ANGLE_REFINE_DEPTH: usize = 24;

struct RayIntegral {
    value: f64,
    pattern: u64,
}

/// `∫₀^r (|∇u|² + λ²χ_{u>0}) ρ dρ` along the ray at angle `theta`.
fn ray_integral(u: &impl PlanarField, r: f64, theta: f64, lambda: f64) -> Option<RayIntegral> {
    let dir = Point2::from_angle(theta);
    let d = r / WEISS_RINGS as f64;
    let l2 = lambda * lambda;
    let mut total = 0.0;
    let mut pattern = 0u64;
    let mut prev = u.value(Point2::new(0.0, 0.0))?;
    for k in 0..WEISS_RINGS {
        let (a, b) = (k as f64 * d, (k + 1) as f64 * d);
        let vb = u.value(dir * b)?;
        let (pa, pb) = (prev > 0.0, vb > 0.0);
        if pb {
            pattern ^= 1 << (k % 64);
        }
        // positive sub-interval [lo, hi] of [a, b]
        let (lo, hi) = if pa == pb {
            if pa { (a, b) } else { (b, b) }
        } else {
            let (mut x0, mut x1) = (a, b);
            for _ in 0..40 {
                let m = 0.5 * (x0 + x1);
                let pm = u.value(dir * m)? > 0.0;
                if pm == pa {
                    x0 = m;
                } else {
                    x1 = m;
                }
            }
            let z = 0.5 * (x0 + x1);
            if pa { (a, z) } else { (z, b) }
        };
        if hi > lo {
            let mid = 0.5 * (lo + hi);
            let g = u.gradient(dir * mid)?;
            total += (g[0] * g[0] + g[1] * g[1]) * mid * (hi - lo) + l2 * 0.5 * (hi * hi - lo * lo);
        }
        prev = vb;
    }
    Some(RayIntegral { value: total, pattern })
}

fn angular_integral(
    u: &impl PlanarField,
    r: f64,
    lambda: f64,
    a: f64,
    b: f64,
    fa: &RayIntegral,
    fb: &RayIntegral,
    depth: usize,
) -> Option<f64> {
    if fa.pattern == fb.pattern || depth == 0 {
        return Some(0.5 * (fa.value + fb.value) * (b - a));
    }
    let m = 0.5 * (a + b);
    let fm = ray_integral(u, r, m, lambda)?;
    Some(
        angular_integral(u, r, lambda, a, m, fa, &fm, depth - 1)?
            + angular_integral(u, r, lambda, m, b, &fm, fb, depth - 1)?,
    )
}

/// `W(u, r) = r⁻² ∫_{B_r}(|∇u|² + λ²χ_{u>0}) − r⁻³ ∫_{∂B_r} u²` for `u` centred at the origin.
pub fn weiss_energy(u: &impl PlanarField, lambda: f64, radii: &[f64]) -> Result<WeissProfile> {
    let mut values = Vec::with_capacity(radii.len());
    let dth = TAU / CIRCLE_POINTS as f64;
    let outside = || Error::OutOfDomain { x: 0.0, y: 0.0 };
    for &r in radii {
        let rays: Vec<RayIntegral> = (0..=CIRCLE_POINTS)
            .map(|j| ray_integral(u, r, dth * j as f64, lambda))
            .collect::<Option<_>>()
            .ok_or_else(outside)?;
        let mut area = 0.0;
        for j in 0..CIRCLE_POINTS {
            area += angular_integral(
                u,
                r,
                lambda,
                dth * j as f64,
                dth * (j + 1) as f64,
                &rays[j],
                &rays[j + 1],
                ANGLE_REFINE_DEPTH,
            )
            .ok_or_else(outside)?;
        }
        let mut boundary = 0.0;
        for j in 0..CIRCLE_POINTS {
            let v = u.value(Point2::from_angle(dth * j as f64) * r).ok_or_else(outside)?;
            boundary += v * v;
        }
        boundary *= r * dth;
        values.push(area / (r * r) - boundary / (r * r * r));
    }
    Ok(WeissProfile {
        radii: radii.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyProfile {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Smallest ratio over the tested radii.
    pub c0: f64,
    pub degenerate: bool,
}

/// `(⨍_{∂B_r(x0)} ψ²)^{1/2} / r` for each radius.
pub fn nondegeneracy_ratio(field: &impl PlanarField, x0: Point2, radii: &[f64]) -> Result<NondegeneracyProfile> {
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut acc = 0.0;
        for j in 0..CIRCLE_POINTS {
            let p = x0 + Point2::from_angle(TAU * j as f64 / CIRCLE_POINTS as f64) * r;
            let v = field.value(p).ok_or(Error::OutOfDomain { x: p.x, y: p.y })?;
            acc += v * v;
        }
        ratios.push((acc / CIRCLE_POINTS as f64).sqrt() / r);
    }
    let c0 = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c0 = if c0.is_finite() { c0 } else { 0.0 };
    Ok(NondegeneracyProfile {
        radii: radii.to_vec(),
        ratios,
        c0,
        degenerate: !(c0 > 0.0),
    })
}

/// `sup_{B₁} max_ij |K(rX) − I|_ij` on a polar lattice.
pub fn coefficient_flatness(pitch: Pitch, r: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..=32 {
        for j in 0..CIRCLE_POINTS {
            let p = Point2::from_angle(TAU * j as f64 / CIRCLE_POINTS as f64) * (r * i as f64 / 32.0);
            worst = worst.max(coeff_matrix(p, pitch).max_abs_diff(&CoeffMatrix::IDENTITY));
        }
    }
    worst
}
