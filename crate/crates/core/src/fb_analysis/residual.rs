use serde::Serialize;

use super::contour::FreeBoundaryCurve;
use crate::coefficients::coeff_matrix;
use crate::discretization::StreamField;
use crate::field::{PlanarField, Point2};
use crate::helix::Pitch;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub max_abs: f64,
    pub mean: f64,
    pub rms: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

impl ResidualSummary {
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (mut max_abs, mut sum, mut sq, mut evaluated, mut skipped) = (0.0f64, 0.0, 0.0, 0, 0);
        for v in values {
            match v {
                Some(r) => {
                    max_abs = max_abs.max(r.abs());
                    sum += r;
                    sq += r * r;
                    evaluated += 1;
                }
                None => skipped += 1,
            }
        }
        let n = evaluated.max(1) as f64;
        Self {
            max_abs,
            mean: sum / n,
            rms: (sq / n).sqrt(),
            evaluated,
            skipped,
        }
    }
}

/// How far (in cells) the one-sided search may walk into the positive set.
const MAX_MARCH_CELLS: f64 = 8.0;

/// Gradient from the nearest cell along `∇ψ` whose four corners all exceed `tau`.
pub fn positive_side_gradient(psi: &StreamField, p: Point2, tau: f64) -> Option<(Point2, [f64; 2])> {
    let grid = psi.grid();
    let h = grid.h();
    let g0 = psi.gradient(p)?;
    let norm = g0[0].hypot(g0[1]);
    if norm == 0.0 {
        return None;
    }
    let dir = Point2::new(g0[0] / norm, g0[1] / norm);
    let steps = (4.0 * MAX_MARCH_CELLS) as usize;
    for s in 0..=steps {
        let q = p + dir * (0.25 * h * s as f64);
        let (i, j, _, _) = grid.locate(q)?;
        let corners = grid.cell_corners(i, j);
        if corners.iter().all(|&n| psi.values()[n] > tau) {
            return Some((grid.cell_center(i, j), psi.cell_gradient(i, j)));
        }
    }
    None
}

/// `⟨K∇ψ⁺, ∇ψ⁺⟩ − λ²` at every vertex; stores the values on the curve.
pub fn fb_condition_residual(
    psi: &StreamField,
    curve: &mut FreeBoundaryCurve,
    pitch: Pitch,
    lambda: f64,
    tau: f64,
) -> ResidualSummary {
    curve.residuals = curve
        .vertices
        .iter()
        .map(|&p| {
            positive_side_gradient(psi, p, tau).map(|(at, g)| {
                coeff_matrix(at, pitch).quad(Point2::new(g[0], g[1])) - lambda * lambda
            })
        })
        .collect();
    ResidualSummary::from_values(curve.residuals.iter().copied())
}

/// Power-law fit `ω(s) ≈ C sᵅ` of the tangent-angle oscillation along a curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub scales: Vec<f64>,
    pub oscillation: Vec<f64>,
    pub alpha: f64,
    pub constant: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI
}

/// Tangent-angle modulus of continuity on arclength scales `s_min·2ᵏ ≤ s_max`.
pub fn tangent_holder(curve: &FreeBoundaryCurve, s_min: f64, s_max: f64) -> Option<HolderFit> {
    let segs: Vec<(Point2, Point2)> = curve.segments().filter(|(a, b)| (*b - *a).norm() > 0.0).collect();
    if segs.len() < 4 || !(s_min > 0.0) || s_max <= s_min {
        return None;
    }
    // tangent angle and arclength at segment midpoints, angle unwrapped
    let mut arc = Vec::with_capacity(segs.len());
    let mut angle = Vec::with_capacity(segs.len());
    let mut s = 0.0;
    for (k, (a, b)) in segs.iter().enumerate() {
        let len = (*b - *a).norm();
        let raw = (*b - *a).angle();
        let th = if k == 0 { raw } else { angle[k - 1] + wrap_angle(raw - angle[k - 1]) };
        arc.push(s + 0.5 * len);
        angle.push(th);
        s += len;
    }
    let total = s;
    let mut scales = Vec::new();
    let mut osc = Vec::new();
    let mut scale = s_min;
    while scale <= s_max.min(0.5 * total) {
        // average tangent over windows of length `scale` to suppress vertex noise,
        // then compare neighbouring windows
        let mut worst: f64 = 0.0;
        let mut start = 0.0;
        let window = |lo: f64, hi: f64| {
            let (mut sum, mut w) = (0.0, 0.0);
            for (k, (a, b)) in segs.iter().enumerate() {
                if arc[k] >= lo && arc[k] < hi {
                    let len = (*b - *a).norm();
                    sum += angle[k] * len;
                    w += len;
                }
            }
            (w > 0.0).then(|| sum / w)
        };
        while start + 2.0 * scale <= total {
            if let (Some(a), Some(b)) = (window(start, start + scale), window(start + scale, start + 2.0 * scale)) {
                worst = worst.max((b - a).abs());
            }
            start += 0.5 * scale;
        }
        scales.push(scale);
        osc.push(worst);
        scale *= 2.0;
    }
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(&osc)
        .filter(|(_, &o)| o > 0.0)
        .map(|(&s, &o)| (s.ln(), o.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let alpha = sxy / sxx;
    Some(HolderFit {
        scales,
        oscillation: osc,
        alpha,
        constant: (my - alpha * mx).exp(),
    })
}
