use std::sync::Arc;

use super::grid::{CrossSectionGrid, StreamField};
use super::operator::Discretization;
use super::RegularizationParams;
use crate::coefficients::{BernoulliConstant, VorticityProfile};
use crate::helix::Pitch;

/// Piecewise-linear positivity indicator `H_ε`.
#[inline]
pub fn ramp(s: f64, epsilon: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s < epsilon {
        s / epsilon
    } else {
        1.0
    }
}

/// Right derivative of [`ramp`]; `1/ε` on `[0, ε)`.
#[inline]
pub fn ramp_slope(s: f64, epsilon: f64) -> f64 {
    if (0.0..epsilon).contains(&s) {
        1.0 / epsilon
    } else {
        0.0
    }
}

/// The regularised discrete energy `J_ε` on a fixed grid.
#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    disc: Arc<Discretization>,
    profile: VorticityProfile,
    lambda: f64,
    epsilon: f64,
}

impl EnergyFunctional {
    pub fn new(
        disc: Arc<Discretization>,
        profile: VorticityProfile,
        lambda: BernoulliConstant,
        reg: RegularizationParams,
    ) -> Self {
        Self {
            disc,
            profile,
            lambda: lambda.lambda(),
            epsilon: reg.epsilon,
        }
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }
    pub fn grid(&self) -> &Arc<CrossSectionGrid> {
        self.disc.grid()
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn profile(&self) -> &VorticityProfile {
        &self.profile
    }
    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }

    pub fn value(&self, psi: &[f64]) -> f64 {
        let grid = self.disc.grid();
        let h2 = grid.h() * grid.h();
        let l2 = self.lambda * self.lambda;
        let mut e = self.disc.gradient_energy(psi);
        let mut pot = 0.0;
        for (n, &s) in psi.iter().enumerate() {
            let w = self.disc.weight(n);
            if w == 0.0 {
                continue;
            }
            let big_f = if self.profile.is_zero() { 0.0 } else { self.profile.eval(s).primitive };
            pot += w * (-2.0 * big_f + l2 * ramp(s, self.epsilon));
        }
        e += h2 * pot;
        e
    }

    /// Writes the gradient into `grad` (zero on fixed and exterior nodes) and returns the value.
    pub fn value_and_gradient(&self, psi: &[f64], grad: &mut [f64]) -> f64 {
        let grid = self.disc.grid();
        let h2 = grid.h() * grid.h();
        let l2 = self.lambda * self.lambda;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut e = 0.0;
        self.disc.for_each_cell(|nodes, k| {
            let (q, g) = k.quadratic(nodes.map(|n| psi[n]));
            e += q;
            for (n, gn) in nodes.iter().zip(g) {
                grad[*n] += gn;
            }
        });
        let mut pot = 0.0;
        for (n, &s) in psi.iter().enumerate() {
            let w = self.disc.weight(n);
            if w == 0.0 {
                continue;
            }
            let (big_f, f) = if self.profile.is_zero() {
                (0.0, 0.0)
            } else {
                let p = self.profile.eval(s);
                (p.primitive, p.f)
            };
            pot += w * (-2.0 * big_f + l2 * ramp(s, self.epsilon));
            grad[n] += h2 * w * (-2.0 * f + l2 * ramp_slope(s, self.epsilon));
        }
        for (n, g) in grad.iter_mut().enumerate() {
            if !grid.is_free(n) {
                *g = 0.0;
            }
        }
        e + h2 * pot
    }
}

impl EnergyFunctional {
    /// `out = H v` where `H` is the Hessian away from the kinks of the ramp.
    pub fn hessian_apply(&self, psi: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.disc.for_each_cell(|nodes, k| {
            let (_, g) = k.quadratic(nodes.map(|n| v[n]));
            for (n, gn) in nodes.iter().zip(g) {
                out[*n] += gn;
            }
        });
        if !self.profile.is_zero() {
            let h2 = self.grid().h().powi(2);
            for (n, o) in out.iter_mut().enumerate() {
                let w = self.disc.weight(n);
                if w > 0.0 {
                    *o -= 2.0 * h2 * w * self.profile.eval(psi[n]).df * v[n];
                }
            }
        }
    }

    /// `J_ε(trial) − J_ε(psi)` evaluated term by term, which keeps the
    /// difference accurate when it is far below the rounding level of `J_ε`.
    pub fn difference(&self, psi: &[f64], trial: &[f64]) -> f64 {
        let h2 = self.grid().h().powi(2);
        let l2 = self.lambda * self.lambda;
        let mut d = 0.0;
        self.disc.for_each_cell(|nodes, k| {
            let v = nodes.map(|n| psi[n]);
            let dv = nodes.map(|n| trial[n] - psi[n]);
            if dv.iter().all(|&x| x == 0.0) {
                return;
            }
            let (_, g) = k.quadratic(v);
            let (q, _) = k.quadratic(dv);
            d += g.iter().zip(&dv).map(|(a, b)| a * b).sum::<f64>() + q;
        });
        let mut pot = 0.0;
        for (n, (&a, &b)) in psi.iter().zip(trial).enumerate() {
            let w = self.disc.weight(n);
            if w == 0.0 || a == b {
                continue;
            }
            let df = if self.profile.is_zero() {
                0.0
            } else {
                self.profile.eval(b).primitive - self.profile.eval(a).primitive
            };
            pot += w * (-2.0 * df + l2 * (ramp(b, self.epsilon) - ramp(a, self.epsilon)));
        }
        d + h2 * pot
    }

    /// Diagonal of the Hessian used by [`Self::hessian_apply`].
    pub fn hessian_diagonal(&self, psi: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; psi.len()];
        self.disc.for_each_cell(|nodes, k| {
            let m = k.local_matrix();
            for (r, n) in nodes.iter().enumerate() {
                d[*n] += 2.0 * m[r][r];
            }
        });
        if !self.profile.is_zero() {
            let h2 = self.grid().h().powi(2);
            for (n, dn) in d.iter_mut().enumerate() {
                let w = self.disc.weight(n);
                if w > 0.0 {
                    *dn -= 2.0 * h2 * w * self.profile.eval(psi[n]).df;
                }
            }
        }
        d
    }
}

/// `J_ε(ψ)` for a stream field.
pub fn energy_value(
    psi: &StreamField,
    pitch: Pitch,
    profile: &VorticityProfile,
    lambda: BernoulliConstant,
    reg: RegularizationParams,
) -> f64 {
    let disc = Arc::new(Discretization::new(psi.grid_arc().clone(), pitch));
    EnergyFunctional::new(disc, profile.clone(), lambda, reg).value(psi.values())
}

/// Per-node gradient of `J_ε`, zero on fixed-boundary and exterior nodes.
pub fn energy_gradient(
    psi: &StreamField,
    pitch: Pitch,
    profile: &VorticityProfile,
    lambda: BernoulliConstant,
    reg: RegularizationParams,
) -> Vec<f64> {
    let disc = Arc::new(Discretization::new(psi.grid_arc().clone(), pitch));
    let mut grad = vec![0.0; psi.values().len()];
    EnergyFunctional::new(disc, profile.clone(), lambda, reg).value_and_gradient(psi.values(), &mut grad);
    grad
}
