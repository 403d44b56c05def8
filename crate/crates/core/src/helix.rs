//! Screw-group geometry.
//!
//! A screw motion `S_ρ` rotates by `ρ` about the z-axis (clockwise when seen
//! from above, `R_ρ (x, y) = (x cos ρ + y sin ρ, −x sin ρ + y cos ρ)`) and
//! translates by `κρ` along it. Helical scalars are invariant under every
//! `S_ρ`; helical vector fields satisfy `v(S_ρ p) = R_ρ v(p)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point2;

/// Length scale of the helix; one full turn rises by `2πκ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pitch(f64);

impl Pitch {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa == 0.0 || !kappa.is_finite() {
            return Err(Error::Config("pitch must be nonzero".into()));
        }
        Ok(Self(kappa))
    }

    #[inline]
    pub fn kappa(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vector3;

impl Vector3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn planar(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn axis(k: usize) -> Self {
        match k {
            0 => Self::new(1.0, 0.0, 0.0),
            1 => Self::new(0.0, 1.0, 0.0),
            _ => Self::new(0.0, 0.0, 1.0),
        }
    }
}

impl Add for Vector3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vector3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vector3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vector3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewMotion {
    pub rho: f64,
    pub pitch: Pitch,
}

impl ScrewMotion {
    pub fn new(rho: f64, pitch: Pitch) -> Self {
        Self { rho, pitch }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        screw_transform(p, *self)
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.rho, self.pitch)
    }
}

/// The rotation `R_ρ` acting on the first two components.
pub fn rotate(rho: f64, v: Vector3) -> Vector3 {
    let (s, c) = rho.sin_cos();
    Vector3::new(v.x * c + v.y * s, -v.x * s + v.y * c, v.z)
}

pub fn screw_transform(p: Point3, m: ScrewMotion) -> Point3 {
    let r = rotate(m.rho, p);
    Vector3::new(r.x, r.y, p.z + m.pitch.kappa() * m.rho)
}

/// Tangent `ξ_κ = (y, −x, κ)` of the helical orbits.
pub fn xi_field(p: Point3, pitch: Pitch) -> Vector3 {
    Vector3::new(p.y, -p.x, pitch.kappa())
}

/// A scalar field on (a subset of) R³.
pub trait ScalarField3 {
    fn value(&self, p: Point3) -> Option<f64>;

    /// Gradient at `p`. The default is a second-order central difference.
    fn gradient(&self, p: Point3, step: f64) -> Option<Vector3> {
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            let e = Vector3::axis(k) * step;
            let fp = self.value(p + e)?;
            let fm = self.value(p - e)?;
            *gk = (fp - fm) / (2.0 * step);
        }
        Some(Vector3::new(g[0], g[1], g[2]))
    }
}

/// A vector field on (a subset of) R³.
pub trait VectorField3 {
    fn value(&self, p: Point3) -> Option<Vector3>;

    /// Rows are the gradients of the three components.
    fn jacobian(&self, p: Point3, step: f64) -> Option<[Vector3; 3]> {
        let mut cols = [Vector3::default(); 3];
        for (k, col) in cols.iter_mut().enumerate() {
            let e = Vector3::axis(k) * step;
            let vp = self.value(p + e)?;
            let vm = self.value(p - e)?;
            *col = (vp - vm) * (1.0 / (2.0 * step));
        }
        Some([
            Vector3::new(cols[0].x, cols[1].x, cols[2].x),
            Vector3::new(cols[0].y, cols[1].y, cols[2].y),
            Vector3::new(cols[0].z, cols[1].z, cols[2].z),
        ])
    }
}

/// Scalar field sampled from a closure; gradients by finite differences.
pub struct SampledScalar<F>(pub F);

impl<F: Fn(Point3) -> Option<f64>> ScalarField3 for SampledScalar<F> {
    fn value(&self, p: Point3) -> Option<f64> {
        (self.0)(p)
    }
}

/// Scalar field with a closed-form gradient.
pub struct AnalyticScalar<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> ScalarField3 for AnalyticScalar<F, G>
where
    F: Fn(Point3) -> f64,
    G: Fn(Point3) -> Vector3,
{
    fn value(&self, p: Point3) -> Option<f64> {
        Some((self.value)(p))
    }

    fn gradient(&self, p: Point3, _step: f64) -> Option<Vector3> {
        Some((self.gradient)(p))
    }
}

/// Vector field sampled from a closure; Jacobians by finite differences.
pub struct SampledVector<F>(pub F);

impl<F: Fn(Point3) -> Option<Vector3>> VectorField3 for SampledVector<F> {
    fn value(&self, p: Point3) -> Option<Vector3> {
        (self.0)(p)
    }
}

/// Vector field with a closed-form Jacobian (rows = component gradients).
pub struct AnalyticVector<F, J> {
    pub value: F,
    pub jacobian: J,
}

impl<F, J> VectorField3 for AnalyticVector<F, J>
where
    F: Fn(Point3) -> Vector3,
    J: Fn(Point3) -> [Vector3; 3],
{
    fn value(&self, p: Point3) -> Option<Vector3> {
        Some((self.value)(p))
    }

    fn jacobian(&self, p: Point3, _step: f64) -> Option<[Vector3; 3]> {
        Some((self.jacobian)(p))
    }
}

/// Max/mean of a residual over a probe set.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub evaluated: usize,
    pub skipped: Vec<Point3>,
}

impl ResidualStats {
    fn from_values(values: &[f64], skipped: Vec<Point3>) -> Self {
        let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
        let mean = if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        Self {
            max,
            mean,
            evaluated: values.len(),
            skipped,
        }
    }
}

/// Residuals of the three identities `∇v₁·ξ − v₂`, `∇v₂·ξ + v₁`, `∇v₃·ξ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VectorHelicityReport {
    pub first: ResidualStats,
    pub second: ResidualStats,
    pub third: ResidualStats,
}

impl VectorHelicityReport {
    pub fn max(&self) -> f64 {
        self.first.max.max(self.second.max).max(self.third.max)
    }
}

/// Finite-difference step `1e-4 · diameter` of the probe set's bounding box.
pub fn default_step(probes: &[Point3]) -> f64 {
    if probes.is_empty() {
        return 1e-4;
    }
    let mut lo = probes[0];
    let mut hi = probes[0];
    for p in probes {
        lo = Vector3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vector3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let diam = (hi - lo).norm();
    if diam > 0.0 {
        1e-4 * diam
    } else {
        1e-4
    }
}

/// Checks `∇f · ξ_κ = 0` on the probe set.
pub fn verify_helical_function(
    sampler: &dyn ScalarField3,
    probes: &[Point3],
    pitch: Pitch,
    step: f64,
) -> Result<ResidualStats> {
    if !(step > 0.0) {
        return Err(Error::Input("finite-difference step must be positive".into()));
    }
    let mut values = Vec::with_capacity(probes.len());
    let mut skipped = Vec::new();
    for &p in probes {
        match sampler.gradient(p, step) {
            Some(g) => values.push(g.dot(xi_field(p, pitch)).abs()),
            None => skipped.push(p),
        }
    }
    Ok(ResidualStats::from_values(&values, skipped))
}

/// Checks the three helical vector field identities on the probe set.
pub fn verify_helical_vector_field(
    sampler: &dyn VectorField3,
    probes: &[Point3],
    pitch: Pitch,
    step: f64,
) -> Result<VectorHelicityReport> {
    if !(step > 0.0) {
        return Err(Error::Input("finite-difference step must be positive".into()));
    }
    let mut r = [Vec::new(), Vec::new(), Vec::new()];
    let mut skipped = Vec::new();
    for &p in probes {
        let (Some(v), Some(jac)) = (sampler.value(p), sampler.jacobian(p, step)) else {
            skipped.push(p);
            continue;
        };
        let xi = xi_field(p, pitch);
        r[0].push((jac[0].dot(xi) - v.y).abs());
        r[1].push((jac[1].dot(xi) + v.x).abs());
        r[2].push(jac[2].dot(xi).abs());
    }
    Ok(VectorHelicityReport {
        first: ResidualStats::from_values(&r[0], skipped.clone()),
        second: ResidualStats::from_values(&r[1], skipped.clone()),
        third: ResidualStats::from_values(&r[2], skipped),
    })
}

/// A vector-valued field given on the cross-section `{z = 0}`.
pub trait CrossSectionField {
    fn value(&self, p: Point2) -> Option<Vector3>;
}

impl<F: Fn(Point2) -> Option<Vector3>> CrossSectionField for F {
    fn value(&self, p: Point2) -> Option<Vector3> {
        self(p)
    }
}

/// Extends cross-section data helically: `u(p) = R_{z/κ} u₀(S_{−z/κ} p)`.
pub fn helical_extend_field(
    cross_section: &dyn CrossSectionField,
    p: Point3,
    pitch: Pitch,
) -> Result<Vector3> {
    let rho = p.z / pitch.kappa();
    if rho == 0.0 {
        let q = p.planar();
        return cross_section
            .value(q)
            .ok_or(Error::OutOfDomain { x: q.x, y: q.y });
    }
    let base = screw_transform(p, ScrewMotion::new(-rho, pitch));
    let q = base.planar();
    let v = cross_section
        .value(q)
        .ok_or(Error::OutOfDomain { x: q.x, y: q.y })?;
    Ok(rotate(rho, v))
}

/// [`helical_extend_field`] viewed as a 3D vector field.
pub struct HelicalExtension<'a> {
    pub cross_section: &'a dyn CrossSectionField,
    pub pitch: Pitch,
}

impl VectorField3 for HelicalExtension<'_> {
    fn value(&self, p: Point3) -> Option<Vector3> {
        helical_extend_field(self.cross_section, p, self.pitch).ok()
    }
}
