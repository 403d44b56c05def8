//! Closed-form solutions and the two reference problems built on them.

use std::sync::Arc;

use crate::coefficients::BernoulliConstant;
use crate::discretization::{BoundaryData, BoundaryRegion, CrossSectionGrid, DomainSpec, FixedBoundarySpec};
use crate::error::Result;
use crate::field::{HalfPlane, PlanarField, Point2};
use crate::helix::Pitch;

/// `λ (h₀ − y)⁺`.
pub fn strip_solution(lambda: f64, h0: f64) -> HalfPlane {
    HalfPlane {
        lambda,
        normal: Point2::new(0.0, -1.0),
        offset: -h0,
    }
}

/// Radially symmetric solution `C [ln(R₀/r) + (R₀² − r²)/(2κ²)]` for `r < R₀`, zero beyond.
///
/// It satisfies `div(K∇ψ) = 0` away from the origin and the gradient
/// condition `⟨K∇ψ, ∇ψ⟩ = λ²` on `r = R₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolution {
    pub c: f64,
    pub r0: f64,
    pub kappa: f64,
}

impl RadialSolution {
    pub fn new(lambda: BernoulliConstant, r0: f64, pitch: Pitch) -> Self {
        let k = pitch.kappa();
        Self {
            c: lambda.lambda() * r0 * k.abs() / (k * k + r0 * r0).sqrt(),
            r0,
            kappa: k,
        }
    }

    /// Closed-form profile continued past `R₀` (negative there).
    pub fn profile(&self, r: f64) -> f64 {
        self.c * ((self.r0 / r).ln() + (self.r0 * self.r0 - r * r) / (2.0 * self.kappa * self.kappa))
    }

    pub fn radial_derivative(&self, r: f64) -> f64 {
        let k2 = self.kappa * self.kappa;
        -self.c * (k2 + r * r) / (k2 * r)
    }

    /// Radius `r < R₀` where `ψ(r) = θ`, for `0 ≤ θ < ψ(r_min)`.
    pub fn level_radius(&self, theta: f64, r_min: f64) -> f64 {
        let (mut lo, mut hi) = (r_min, self.r0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.profile(mid) > theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl PlanarField for RadialSolution {
    fn value(&self, p: Point2) -> Option<f64> {
        let r = p.norm();
        if r == 0.0 {
            return None;
        }
        Some(if r < self.r0 { self.profile(r) } else { 0.0 })
    }

    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        let r = p.norm();
        if r == 0.0 {
            return None;
        }
        if r >= self.r0 {
            return Some([0.0, 0.0]);
        }
        let d = self.radial_derivative(r) / r;
        Some([d * p.x, d * p.y])
    }
}

/// Unit square with `ψ = g` on the bottom edge and `ψ = 0` on the top edge.
pub fn strip_problem(h: f64, g: f64) -> Result<(DomainSpec, FixedBoundarySpec, Arc<CrossSectionGrid>)> {
    let domain = DomainSpec::Rectangle {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };
    let fixed = FixedBoundarySpec::new()
        .constant(BoundaryRegion::Bottom, g)
        .constant(BoundaryRegion::Top, 0.0);
    let grid = Arc::new(CrossSectionGrid::build(&domain, h, &fixed)?);
    Ok((domain, fixed, grid))
}

/// Annulus `r_inner ≤ r ≤ r_outer` about the origin with exact data on the inner
/// ring and `ψ = 0` on the outer ring.
pub fn annulus_problem(
    solution: RadialSolution,
    r_inner: f64,
    r_outer: f64,
    h: f64,
) -> Result<(DomainSpec, FixedBoundarySpec, Arc<CrossSectionGrid>)> {
    let domain = DomainSpec::Annulus {
        center: Point2::new(0.0, 0.0),
        r_inner,
        r_outer,
    };
    let exact = move |p: Point2| solution.value(p).unwrap_or(0.0).max(0.0);
    let fixed = FixedBoundarySpec::new()
        .with(BoundaryRegion::InnerRing, BoundaryData::function(exact))
        .with(BoundaryRegion::OuterRing, BoundaryData::function(exact));
    let grid = Arc::new(CrossSectionGrid::build(&domain, h, &fixed)?);
    Ok((domain, fixed, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::coeff_matrix;

    #[test]
    fn radial_constant_and_condition() {
        let sol = RadialSolution::new(BernoulliConstant::new(1.0).unwrap(), 1.0, Pitch::new(1.0).unwrap());
        assert!((sol.c - 0.5f64.sqrt()).abs() < 1e-15);
        let p = Point2::new(1.0 - 1e-12, 0.0);
        let g = sol.gradient(p).unwrap();
        let k = coeff_matrix(p, Pitch::new(1.0).unwrap());
        let q = k.quad(Point2::new(g[0], g[1]));
        assert!((q - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radial_flux_is_constant() {
        // r K∇ψ·e_r is independent of r, so div(K∇ψ) = 0
        let pitch = Pitch::new(0.7).unwrap();
        let sol = RadialSolution::new(BernoulliConstant::new(2.0).unwrap(), 1.3, pitch);
        let flux = |r: f64| {
            let p = Point2::new(r, 0.0);
            let g = sol.gradient(p).unwrap();
            r * coeff_matrix(p, pitch).apply(Point2::new(g[0], g[1])).x
        };
        let f0 = flux(0.3);
        for r in [0.4, 0.7, 1.0, 1.2] {
            assert!((flux(r) - f0).abs() < 1e-12);
        }
    }

    #[test]
    fn level_radius_inverts_profile() {
        let sol = RadialSolution::new(BernoulliConstant::new(1.0).unwrap(), 1.0, Pitch::new(1.0).unwrap());
        let r = sol.level_radius(0.01, 0.25);
        assert!((sol.profile(r) - 0.01).abs() < 1e-12);
    }
}
