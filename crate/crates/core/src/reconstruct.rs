//! Recovery of the 3D helical velocity from the cross-section stream function.
//!
//! On `{z = 0}` the in-plane velocity is `(u₁, u₂) = J K ∇ψ` with
//! `J = [[0, 1], [−1, 0]]`, and `u₃ = (−y u₁ + x u₂)/κ` makes `u · ξ_κ = 0`.
//! Off the cross-section the field is the helical extension
//! `u(p) = R_{z/κ} u₀(S_{−z/κ} p)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::{coeff_matrix, VorticityProfile};
use crate::discretization::{CrossSectionGrid, StreamField};
use crate::error::{Error, Result};
use crate::field::{PlanarField, Point2};
use crate::helix::{
    helical_extend_field, rotate, screw_transform, verify_helical_vector_field, xi_field,
    CrossSectionField, HelicalExtension, Pitch, Point3, ScrewMotion, Vector3, VectorField3,
    VectorHelicityReport,
};

/// Velocity at a cross-section point from `∇ψ`, via `J K ∇ψ` and orthogonality.
pub fn velocity_from_gradient(p: Point2, grad: [f64; 2], pitch: Pitch) -> Vector3 {
    let kg = coeff_matrix(p, pitch).apply(Point2::new(grad[0], grad[1]));
    let (u1, u2) = (kg.y, -kg.x);
    Vector3::new(u1, u2, (-p.y * u1 + p.x * u2) / pitch.kappa())
}

/// The same velocity written as one explicit matrix acting on `∇ψ`.
pub fn velocity_closed_form(p: Point2, grad: [f64; 2], pitch: Pitch) -> Vector3 {
    let k = pitch.kappa();
    let k2 = k * k;
    let (x, y) = (p.x, p.y);
    let (px, py) = (grad[0], grad[1]);
    let s = 1.0 / (k2 + x * x + y * y);
    Vector3::new(
        s * (-x * y * px + (k2 + x * x) * py),
        s * (-(k2 + y * y) * px + x * y * py),
        -s * k * (x * px + y * py),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelicalVelocitySample {
    pub position: Point3,
    pub velocity: Vector3,
}

impl HelicalVelocitySample {
    /// `|u · ξ_κ|` at the sample.
    pub fn orthogonality_defect(&self, pitch: Pitch) -> f64 {
        self.velocity.dot(xi_field(self.position, pitch)).abs()
    }
}

/// Catmull-Rom weights for nodes at offsets −1, 0, 1, 2.
fn cubic_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Velocity on the cross-section `{z = 0}`, stored at the grid nodes.
#[derive(Debug, Clone)]
pub struct CrossSectionVelocity {
    grid: Arc<CrossSectionGrid>,
    pitch: Pitch,
    u1: Vec<f64>,
    u2: Vec<f64>,
    closed_form_gap: f64,
}

impl CrossSectionVelocity {
    pub fn grid(&self) -> &CrossSectionGrid {
        &self.grid
    }

    pub fn pitch(&self) -> Pitch {
        self.pitch
    }

    /// Nodal velocity, `None` off the mask.
    pub fn node_velocity(&self, n: usize) -> Option<Vector3> {
        let (u1, u2) = (self.u1[n], self.u2[n]);
        if !(u1.is_finite() && u2.is_finite()) {
            return None;
        }
        let p = self.grid.node_position(n);
        Some(Vector3::new(u1, u2, (-p.y * u1 + p.x * u2) / self.pitch.kappa()))
    }

    /// Largest nodal difference between the two velocity formulas.
    pub fn closed_form_gap(&self) -> f64 {
        self.closed_form_gap
    }

    fn interpolate(&self, p: Point2) -> Option<(f64, f64)> {
        let g = &*self.grid;
        let (i, j, tx, ty) = g.locate(p)?;
        let cubic = i >= 1 && j >= 1 && i + 2 <= g.nx() && j + 2 <= g.ny();
        if cubic {
            let (wx, wy) = (cubic_weights(tx), cubic_weights(ty));
            let (mut a, mut b) = (0.0, 0.0);
            let mut ok = true;
            'outer: for (dj, wyj) in wy.iter().enumerate() {
                for (di, wxi) in wx.iter().enumerate() {
                    let n = g.index(i + di - 1, j + dj - 1);
                    let (v1, v2) = (self.u1[n], self.u2[n]);
                    if !(v1.is_finite() && v2.is_finite()) {
                        ok = false;
                        break 'outer;
                    }
                    a += wxi * wyj * v1;
                    b += wxi * wyj * v2;
                }
            }
            if ok {
                return Some((a, b));
            }
        }
        let c = g.cell_corners(i, j);
        let w = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), tx * ty, (1.0 - tx) * ty];
        let (mut a, mut b) = (0.0, 0.0);
        for (n, wk) in c.iter().zip(w) {
            let (v1, v2) = (self.u1[*n], self.u2[*n]);
            if !(v1.is_finite() && v2.is_finite()) {
                return None;
            }
            a += wk * v1;
            b += wk * v2;
        }
        Some((a, b))
    }
}

impl CrossSectionField for CrossSectionVelocity {
    fn value(&self, p: Point2) -> Option<Vector3> {
        let (u1, u2) = self.interpolate(p)?;
        Some(Vector3::new(u1, u2, (-p.y * u1 + p.x * u2) / self.pitch.kappa()))
    }
}

/// Nodal velocity from the averaged cell-centre gradients of `ψ`.
pub fn velocity_cross_section(psi: &StreamField, pitch: Pitch) -> CrossSectionVelocity {
    let grid = psi.grid_arc().clone();
    let n = grid.node_count();
    let mut u1 = vec![f64::NAN; n];
    let mut u2 = vec![f64::NAN; n];
    let mut gap: f64 = 0.0;
    for k in 0..n {
        if !grid.in_mask(k) {
            continue;
        }
        let Some(g) = psi.node_gradient(k) else { continue };
        let p = grid.node_position(k);
        let u = velocity_from_gradient(p, g, pitch);
        let v = velocity_closed_form(p, g, pitch);
        gap = gap.max((u - v).max_abs());
        u1[k] = u.x;
        u2[k] = u.y;
    }
    CrossSectionVelocity {
        grid,
        pitch,
        u1,
        u2,
        closed_form_gap: gap,
    }
}

/// Cross-section velocity of a field with a known gradient.
pub struct AnalyticVelocity<F> {
    pub psi: F,
    pub pitch: Pitch,
}

impl<F: PlanarField> CrossSectionField for AnalyticVelocity<F> {
    fn value(&self, p: Point2) -> Option<Vector3> {
        Some(velocity_from_gradient(p, self.psi.gradient(p)?, self.pitch))
    }
}

/// The helically extended velocity at an arbitrary point.
pub fn velocity_at(p: Point3, velocity: &dyn CrossSectionField, pitch: Pitch) -> Result<HelicalVelocitySample> {
    Ok(HelicalVelocitySample {
        position: p,
        velocity: helical_extend_field(velocity, p, pitch)?,
    })
}

/// Unit normal `u × ξ_κ / |u × ξ_κ|` of the helical surface through `p`.
pub fn boundary_normal(p: Point3, velocity: &dyn CrossSectionField, pitch: Pitch, tol: f64) -> Result<Vector3> {
    let u = helical_extend_field(velocity, p, pitch)?;
    normal_from_velocity(p, u, pitch, tol)
}

pub fn normal_from_velocity(p: Point3, u: Vector3, pitch: Pitch, tol: f64) -> Result<Vector3> {
    let c = u.cross(xi_field(p, pitch));
    let m = c.norm();
    if !(m >= tol) {
        return Err(Error::DegenerateNormal {
            magnitude: m,
            tolerance: tol,
        });
    }
    Ok(c * (1.0 / m))
}

/// Where and how finely the 3D identities are probed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Lattice spacing in units of `h`.
    pub spacing: f64,
    pub z_levels: Vec<f64>,
    /// Finite-difference step in units of `h`.
    pub step: f64,
    /// Probes need every node within this many cells of their base point to lie in `{ψ > ε}`.
    pub margin: usize,
    pub epsilon: f64,
    /// Alignment is only measured where the cross-section vorticity exceeds this.
    pub vorticity_floor: f64,
    pub spot_checks: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            spacing: 2.0,
            z_levels: vec![0.0, 0.25, 0.5],
            step: 1.0,
            margin: 3,
            epsilon: 0.0,
            vorticity_floor: 1e-2,
            spot_checks: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldResidualReport {
    /// `max |div u|` over the interior probe lattice.
    pub divergence: f64,
    /// `max |w × ξ_κ| / (|w| |ξ_κ|)` over probes with resolved vorticity.
    pub alignment: f64,
    pub alignment_evaluated: usize,
    /// `max |W − f(ψ)|` over interior nodes.
    pub vorticity: f64,
    /// `max |u · ξ_κ|` over all probes.
    pub orthogonality: f64,
    /// Conservation-form divergence of the cross-section velocity, max over interior nodes.
    pub conservation: f64,
    pub closed_form_gap: f64,
    pub helicity: VectorHelicityReport,
    /// `max |u(S_ρ p) − R_ρ u(p)|` over seeded random `ρ` and probes.
    pub helicity_spot_check: f64,
    pub probes: usize,
    pub interior_nodes: usize,
}

/// Nodes whose whole `margin`-neighbourhood lies in the mask with `ψ > ε`.
fn deep_nodes(psi: &StreamField, epsilon: f64, margin: usize) -> Vec<bool> {
    let g = psi.grid();
    let v = psi.values();
    let good: Vec<bool> = (0..g.node_count()).map(|n| g.in_mask(n) && v[n] > epsilon).collect();
    let (nx, ny) = (g.nx(), g.ny());
    let mut deep = vec![false; g.node_count()];
    for j in margin..=ny.saturating_sub(margin) {
        for i in margin..=nx.saturating_sub(margin) {
            if i + margin > nx || j + margin > ny {
                continue;
            }
            deep[g.index(i, j)] = (j - margin..=j + margin)
                .all(|b| (i - margin..=i + margin).all(|a| good[g.index(a, b)]));
        }
    }
    deep
}

/// Lattice points `(x, y, z)` at the requested spacing whose pulled-back base lies in a
/// cell with `deep` corners, checked for the whole finite-difference stencil.
fn probe_points(grid: &CrossSectionGrid, deep: &[bool], pitch: Pitch, opts: &ProbeOptions) -> Vec<Point3> {
    let h = grid.h();
    let spacing = opts.spacing * h;
    let step = opts.step * h;
    let (lo, hi) = grid.bounding_box();
    let nx = ((hi.x - lo.x) / spacing).floor() as usize;
    let ny = ((hi.y - lo.y) / spacing).floor() as usize;
    let base_ok = |q: Point3| {
        let base = screw_transform(q, ScrewMotion::new(-q.z / pitch.kappa(), pitch)).planar();
        grid.locate(base)
            .is_some_and(|(i, j, _, _)| grid.cell_corners(i, j).iter().all(|&n| deep[n]))
    };
    let mut out = Vec::new();
    for &z in &opts.z_levels {
        for b in 0..=ny {
            for a in 0..=nx {
                let p = Vector3::new(lo.x + a as f64 * spacing, lo.y + b as f64 * spacing, z);
                let stencil_ok = base_ok(p)
                    && (0..3).all(|k| {
                        let e = Vector3::axis(k) * step;
                        base_ok(p + e) && base_ok(p - e)
                    });
                if stencil_ok {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Divergence, vorticity alignment, `W = f(ψ)` and helicity residuals of the reconstruction.
pub fn field_residuals(
    psi: &StreamField,
    pitch: Pitch,
    profile: &VorticityProfile,
    opts: &ProbeOptions,
) -> Result<FieldResidualReport> {
    let velocity = velocity_cross_section(psi, pitch);
    let grid = psi.grid();
    let h = grid.h();
    let kappa = pitch.kappa();
    let deep = deep_nodes(psi, opts.epsilon, opts.margin.max(1));

    // cross-section quantities at interior nodes by central differences
    let (mut vorticity, mut conservation, mut interior) = (0.0f64, 0.0f64, 0usize);
    let mut w0 = vec![0.0; grid.node_count()];
    for n in 0..grid.node_count() {
        if !deep[n] {
            continue;
        }
        let (i, j) = grid.coords(n);
        let at = |a: usize, b: usize| velocity.node_velocity(grid.index(a, b));
        let (Some(e), Some(w), Some(nn), Some(s)) = (at(i + 1, j), at(i - 1, j), at(i, j + 1), at(i, j - 1)) else {
            continue;
        };
        let big_w = (e.y - w.y - nn.x + s.x) / (2.0 * h);
        w0[n] = big_w;
        vorticity = vorticity.max((big_w - profile.eval(psi.values()[n]).f).abs());
        let flux = |u: Vector3, p: Point2| {
            (
                (kappa * kappa + p.y * p.y) * u.x - p.x * p.y * u.y,
                (kappa * kappa + p.x * p.x) * u.y - p.x * p.y * u.x,
            )
        };
        let (fe, fw) = (flux(e, grid.position(i + 1, j)), flux(w, grid.position(i - 1, j)));
        let (fn_, fs) = (flux(nn, grid.position(i, j + 1)), flux(s, grid.position(i, j - 1)));
        let div_c = ((fe.0 - fw.0) + (fn_.1 - fs.1)) / (2.0 * h * kappa * kappa);
        conservation = conservation.max(div_c.abs());
        interior += 1;
    }

    let probes = probe_points(grid, &deep, pitch, opts);
    let step = opts.step * h;
    let ext = HelicalExtension {
        cross_section: &velocity,
        pitch,
    };
    let (mut divergence, mut alignment, mut orthogonality, mut evaluated) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for &p in &probes {
        let (Some(u), Some(jac)) = (ext.value(p), ext.jacobian(p, step)) else {
            continue;
        };
        let xi = xi_field(p, pitch);
        orthogonality = orthogonality.max(u.dot(xi).abs());
        divergence = divergence.max((jac[0].x + jac[1].y + jac[2].z).abs());
        let w = Vector3::new(jac[2].y - jac[1].z, jac[0].z - jac[2].x, jac[1].x - jac[0].y);
        let base = screw_transform(p, ScrewMotion::new(-p.z / kappa, pitch)).planar();
        let resolved = grid
            .nearest_node(base)
            .is_some_and(|n| deep[n] && w0[n].abs() >= opts.vorticity_floor);
        if resolved && w.norm() > 0.0 {
            alignment = alignment.max(w.cross(xi).norm() / (w.norm() * xi.norm()));
            evaluated += 1;
        }
    }

    let helicity = verify_helical_vector_field(&ext, &probes, pitch, step)?;
    let spot = helicity_spot_check(&velocity, &probes, pitch, opts.spot_checks, opts.seed);

    Ok(FieldResidualReport {
        divergence,
        alignment,
        alignment_evaluated: evaluated,
        vorticity,
        orthogonality,
        conservation,
        closed_form_gap: velocity.closed_form_gap(),
        helicity,
        helicity_spot_check: spot,
        probes: probes.len(),
        interior_nodes: interior,
    })
}

/// `max |u(S_ρ p) − R_ρ u(p)|` for `count` seeded draws of probe and angle.
pub fn helicity_spot_check(
    velocity: &dyn CrossSectionField,
    probes: &[Point3],
    pitch: Pitch,
    count: usize,
    seed: u64,
) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let p = probes[rng.gen_range(0..probes.len())];
        let rho = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let q = screw_transform(p, ScrewMotion::new(rho, pitch));
        if let (Ok(a), Ok(b)) = (
            helical_extend_field(velocity, q, pitch),
            helical_extend_field(velocity, p, pitch),
        ) {
            worst = worst.max((a - rotate(rho, b)).max_abs());
        }
    }
    worst
}

/// Velocity samples on the probe lattice, skipping points outside the support.
pub fn sample_lattice(velocity: &CrossSectionVelocity, spacing: f64, z_levels: &[f64]) -> Vec<HelicalVelocitySample> {
    let grid = velocity.grid();
    let pitch = velocity.pitch();
    let (lo, hi) = grid.bounding_box();
    let nx = ((hi.x - lo.x) / spacing + 1e-9).floor() as usize;
    let ny = ((hi.y - lo.y) / spacing + 1e-9).floor() as usize;
    let mut out = Vec::new();
    for &z in z_levels {
        for b in 0..=ny {
            for a in 0..=nx {
                let p = Vector3::new(lo.x + a as f64 * spacing, lo.y + b as f64 * spacing, z);
                if let Ok(s) = velocity_at(p, velocity, pitch) {
                    out.push(s);
                }
            }
        }
    }
    out
}
