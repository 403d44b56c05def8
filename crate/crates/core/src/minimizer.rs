//! Minimization of the regularised energy over `ψ ≥ 0` with ε-continuation.
//!
//! The default method is a projected Newton iteration with an active-set
//! inner loop; projected Barzilai-Borwein descent is kept as an alternative.

use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::{BernoulliConstant, VorticityProfile};
use crate::discretization::{
    assemble_operator, preconditioned_cg, CrossSectionGrid, Discretization, EnergyFunctional,
    RegularizationParams, StreamField,
};
use crate::error::{Error, Result};
use crate::helix::Pitch;

/// Descent direction used inside each continuation stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Projected Newton steps (conjugate gradients on the inactive set) with Armijo backtracking.
    ProjectedNewton,
    /// Projected gradient steps with Barzilai-Borwein lengths and Armijo backtracking.
    BarzilaiBorwein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub method: Method,
    /// First regularisation width, in units of `h`.
    pub eps_start: f64,
    /// Geometric factor between stages.
    pub eps_factor: f64,
    /// Final regularisation width, in units of `h`.
    pub eps_floor: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step reduction per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Stop when the projected-gradient norm falls below this fraction of its initial value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::ProjectedNewton,
            eps_start: 8.0,
            eps_factor: 0.5,
            eps_floor: 2.0,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.eps_floor > 0.0) {
            return bad("eps_floor must be positive");
        }
        if !(self.eps_start >= self.eps_floor) {
            return bad("eps_start must not be below eps_floor");
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return bad("eps_factor must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo constant must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        Ok(())
    }

    /// Regularisation widths of the continuation, in absolute units.
    pub fn schedule(&self, h: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.eps_start;
        while e > self.eps_floor * (1.0 + 1e-12) {
            out.push(e * h);
            e *= self.eps_factor;
        }
        out.push(self.eps_floor * h);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub epsilon: f64,
    pub iterations: usize,
    pub backtracks: usize,
    pub converged: bool,
    pub final_projected_gradient: f64,
    /// Energy after every accepted step, starting with the stage's initial value.
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub initial_projected_gradient: f64,
    pub final_projected_gradient: f64,
    pub final_energy: f64,
    pub total_iterations: usize,
    /// Nodes clipped to zero when the harmonic start was projected.
    pub initial_clipped: usize,
    /// Node updates where the projection onto `ψ ≥ 0` was active.
    pub projection_activations: usize,
    pub stages: Vec<StageReport>,
}

fn projected_gradient_norm(psi: &[f64], grad: &[f64]) -> f64 {
    psi.iter()
        .zip(grad)
        .map(|(&x, &g)| if x <= 0.0 && g > 0.0 { 0.0 } else { g * g })
        .sum::<f64>()
        .sqrt()
}

/// Step used when the curvature estimate is unusable; the Hessian of the
/// quadratic part is bounded by 16 for `K ≤ I`.
const SAFE_STEP: f64 = 1.0 / 16.0;
const STEP_MIN: f64 = 1e-10;
const STEP_MAX: f64 = 1e3;
const NEWTON_CG_ITERATIONS: usize = 2_000;
/// Regime re-predictions per Newton step.
const REGIME_ROUNDS: usize = 30;

struct StageOutcome {
    report: StageReport,
    activations: usize,
}

fn run_stage_bb(
    energy: &EnergyFunctional,
    free: &[usize],
    psi: &mut [f64],
    tol_abs: f64,
    cfg: &SolverConfig,
) -> StageOutcome {
    let n = psi.len();
    let mut grad = vec![0.0; n];
    let mut e = energy.value_and_gradient(psi, &mut grad);
    let mut trial = psi.to_vec();
    let mut trial_grad = vec![0.0; n];
    let mut history = vec![e];
    let mut alpha = 0.05;
    let mut backtracks = 0;
    let mut activations = 0;
    let mut pg = projected_gradient_norm(psi, &grad);
    let mut iterations = 0;
    let mut converged = pg <= tol_abs;
    while !converged && iterations < cfg.max_iterations {
        let mut step = alpha;
        let mut accepted = false;
        let mut clipped = 0;
        for _ in 0..=cfg.max_backtracks {
            clipped = 0;
            let mut decrease = 0.0;
            for &k in free {
                let mut v = psi[k] - step * grad[k];
                if v < 0.0 {
                    v = 0.0;
                    clipped += 1;
                }
                trial[k] = v;
                decrease += grad[k] * (v - psi[k]);
            }
            let de = energy.difference(psi, &trial);
            if decrease < 0.0 && de <= cfg.armijo * decrease {
                accepted = true;
                e += de;
                energy.value_and_gradient(&trial, &mut trial_grad);
                break;
            }
            step *= cfg.backtrack;
            backtracks += 1;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        activations += clipped;
        let (mut ss, mut sy, mut yy) = (0.0, 0.0, 0.0);
        for &k in free {
            let s = trial[k] - psi[k];
            let y = trial_grad[k] - grad[k];
            ss += s * s;
            sy += s * y;
            yy += y * y;
        }
        psi.copy_from_slice(&trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        history.push(e);
        alpha = if sy > 0.0 {
            // alternate the two Barzilai-Borwein steps
            if iterations % 2 == 0 { ss / sy } else { sy / yy }
        } else {
            SAFE_STEP
        }
        .clamp(STEP_MIN, STEP_MAX);
        pg = projected_gradient_norm(psi, &grad);
        converged = pg <= tol_abs;
    }
    StageOutcome {
        report: StageReport {
            epsilon: energy.epsilon(),
            iterations,
            backtracks,
            converged,
            final_projected_gradient: pg,
            energy_history: history,
        },
        activations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    /// Held at zero.
    Bound,
    /// Inside the ramp `0 ≤ ψ < ε`, where the indicator exerts a constant force.
    Ramp,
    /// `ψ ≥ ε`.
    Bulk,
}

fn classify(v: f64, epsilon: f64) -> Regime {
    if v < 0.0 {
        Regime::Bound
    } else if v < epsilon {
        Regime::Ramp
    } else {
        Regime::Bulk
    }
}

/// One projected Newton iteration per outer step. The step is computed on a
/// piecewise-quadratic model whose regime pattern (bound / ramp / bulk) is
/// re-predicted from the step itself until it stops changing.
fn run_stage_newton(
    energy: &EnergyFunctional,
    free: &[usize],
    psi: &mut [f64],
    tol_abs: f64,
    cfg: &SolverConfig,
) -> StageOutcome {
    let n = psi.len();
    let eps = energy.epsilon();
    let h2 = energy.grid().h().powi(2);
    let l2 = energy.lambda().powi(2);
    let force: Vec<f64> = (0..n)
        .map(|k| h2 * energy.discretization().weight(k) * l2 / eps)
        .collect();
    let mut grad = vec![0.0; n];
    let mut e = energy.value_and_gradient(psi, &mut grad);
    let mut trial = psi.to_vec();
    let mut dir = vec![0.0; n];
    let mut hd = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut inv_diag = vec![0.0; n];
    let mut regime = vec![Regime::Bulk; n];
    let mut history = vec![e];
    let mut backtracks = 0;
    let mut activations = 0;
    let mut pg = projected_gradient_norm(psi, &grad);
    let pg_start = pg;
    let mut iterations = 0;
    let mut converged = pg <= tol_abs;
    while !converged && iterations < cfg.max_iterations {
        let diag = energy.hessian_diagonal(psi);
        // smooth part of the gradient: total minus the current ramp force
        let smooth: Vec<f64> = (0..n)
            .map(|k| grad[k] - if in_ramp(psi[k], eps) { force[k] } else { 0.0 })
            .collect();
        for &k in free {
            regime[k] = if psi[k] <= 0.0 && grad[k] > 0.0 {
                Regime::Bound
            } else {
                classify(psi[k], eps)
            };
        }
        let cg_tol = (pg / pg_start).min(1e-3).max(1e-14);
        dir.iter_mut().for_each(|d| *d = 0.0);
        let point = &*psi;
        for _round in 0..REGIME_ROUNDS {
            // bound nodes move exactly to zero
            let mut bound_step = vec![0.0; n];
            for &k in free {
                if regime[k] == Regime::Bound {
                    bound_step[k] = -psi[k];
                }
            }
            energy.hessian_apply(point, &bound_step, &mut hd);
            let mut guess = vec![0.0; n];
            for &k in free {
                if regime[k] == Regime::Bound {
                    rhs[k] = 0.0;
                    inv_diag[k] = 0.0;
                } else {
                    let f = if regime[k] == Regime::Ramp { force[k] } else { 0.0 };
                    rhs[k] = -(smooth[k] + f + hd[k]);
                    inv_diag[k] = 1.0 / diag[k];
                    guess[k] = dir[k];
                }
            }
            let cg = preconditioned_cg(
                |v, out| {
                    energy.hessian_apply(point, v, out);
                    for &k in free {
                        if regime[k] == Regime::Bound {
                            out[k] = 0.0;
                        }
                    }
                    for (k, o) in out.iter_mut().enumerate() {
                        if inv_diag[k] == 0.0 {
                            *o = 0.0;
                        }
                    }
                },
                &inv_diag,
                &rhs,
                Some(&guess),
                cg_tol,
                NEWTON_CG_ITERATIONS,
            );
            for &k in free {
                dir[k] = if regime[k] == Regime::Bound { bound_step[k] } else { cg.solution[k] };
            }
            // predicted gradient on bound nodes decides whether they are released
            energy.hessian_apply(point, &dir, &mut hd);
            let mut changed = false;
            for &k in free {
                let next = if regime[k] == Regime::Bound {
                    if smooth[k] + hd[k] + force[k] < 0.0 {
                        Regime::Ramp
                    } else {
                        Regime::Bound
                    }
                } else {
                    classify(psi[k] + dir[k], eps)
                };
                if next != regime[k] {
                    regime[k] = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut accepted = false;
        let mut clipped = 0;
        // model step first, scaled gradient as the fallback
        'search: for attempt in 0..2 {
            if attempt == 1 {
                for &k in free {
                    dir[k] = -grad[k] / diag[k];
                }
            }
            let mut step = 1.0;
            for _ in 0..=cfg.max_backtracks {
                clipped = 0;
                let mut decrease = 0.0;
                for &k in free {
                    let mut v = psi[k] + step * dir[k];
                    if v <= 0.0 {
                        if v < 0.0 {
                            clipped += 1;
                        }
                        v = 0.0;
                    }
                    trial[k] = v;
                    decrease += grad[k] * (v - psi[k]);
                }
                let de = energy.difference(psi, &trial);
                if de < 0.0 && de <= cfg.armijo * decrease.min(0.0) {
                    e += de;
                    accepted = true;
                    break 'search;
                }
                step *= cfg.backtrack;
                backtracks += 1;
            }
        }
        if !accepted {
            break;
        }
        iterations += 1;
        activations += clipped;
        psi.copy_from_slice(&trial);
        energy.value_and_gradient(psi, &mut grad);
        history.push(e);
        pg = projected_gradient_norm(psi, &grad);
        converged = pg <= tol_abs;
    }
    StageOutcome {
        report: StageReport {
            epsilon: eps,
            iterations,
            backtracks,
            converged,
            final_projected_gradient: pg,
            energy_history: history,
        },
        activations,
    }
}

/// Whether the ramp force is currently active at node `k`.
fn in_ramp(value: f64, eps: f64) -> bool {
    (0.0..eps).contains(&value)
}

/// Harmonic extension of the Dirichlet data, clipped at zero.
pub fn initial_guess(grid: &Arc<CrossSectionGrid>, pitch: Pitch) -> Result<(Vec<f64>, usize)> {
    if grid.dirichlet_count() == 0 {
        return Ok((vec![0.0; grid.node_count()], 0));
    }
    let (psi, _) = assemble_operator(grid, pitch).solve(|_| 0.0, 1e-12)?;
    let mut values = psi.into_values();
    let mut clipped = 0;
    for (n, v) in values.iter_mut().enumerate() {
        if grid.is_free(n) && *v < 0.0 {
            *v = 0.0;
            clipped += 1;
        }
    }
    Ok((values, clipped))
}

/// Minimises `J_ε` over `{ψ ≥ 0, ψ = g on S}` with ε decreasing from
/// `eps_start·h` to `eps_floor·h`.
pub fn minimize(
    grid: &Arc<CrossSectionGrid>,
    pitch: Pitch,
    profile: &VorticityProfile,
    lambda: BernoulliConstant,
    config: &SolverConfig,
) -> Result<(StreamField, SolveReport)> {
    config.validate()?;
    let (mut psi, initial_clipped) = initial_guess(grid, pitch)?;
    minimize_from(grid, pitch, profile, lambda, config, &mut psi)
        .map(|mut r| {
            r.initial_clipped = initial_clipped;
            r
        })
        .and_then(|r| Ok((StreamField::new(grid.clone(), psi)?, r)))
}

/// As [`minimize`] but starting from a caller-supplied admissible `psi`.
pub fn minimize_from(
    grid: &Arc<CrossSectionGrid>,
    pitch: Pitch,
    profile: &VorticityProfile,
    lambda: BernoulliConstant,
    config: &SolverConfig,
    psi: &mut [f64],
) -> Result<SolveReport> {
    config.validate()?;
    if psi.len() != grid.node_count() {
        return Err(Error::Input("initial field does not match the grid".into()));
    }
    for n in 0..grid.node_count() {
        if let Some(g) = grid.dirichlet_value(n) {
            psi[n] = g;
        } else if !grid.in_mask(n) {
            psi[n] = 0.0;
        } else if !(psi[n] >= 0.0) {
            return Err(Error::Admissibility(format!("initial psi is negative at node {n}")));
        }
    }
    let free: Vec<usize> = (0..grid.node_count()).filter(|&n| grid.is_free(n)).collect();
    let disc = Arc::new(Discretization::new(grid.clone(), pitch));
    let schedule = config.schedule(grid.h());
    let mut energy = EnergyFunctional::new(
        disc,
        profile.clone(),
        lambda,
        RegularizationParams::new(schedule[0])?,
    );
    let mut grad = vec![0.0; psi.len()];
    energy.value_and_gradient(psi, &mut grad);
    let pg0 = projected_gradient_norm(psi, &grad);
    let tol_abs = config.tolerance * pg0;
    let mut stages = Vec::with_capacity(schedule.len());
    let mut activations = 0;
    for &eps in &schedule {
        energy.set_epsilon(eps);
        let out = match config.method {
            Method::ProjectedNewton => run_stage_newton(&energy, &free, psi, tol_abs, config),
            Method::BarzilaiBorwein => run_stage_bb(&energy, &free, psi, tol_abs, config),
        };
        activations += out.activations;
        stages.push(out.report);
    }
    let last = stages.last().unwrap();
    Ok(SolveReport {
        converged: last.converged,
        initial_projected_gradient: pg0,
        final_projected_gradient: last.final_projected_gradient,
        final_energy: *last.energy_history.last().unwrap(),
        total_iterations: stages.iter().map(|s| s.iterations).sum(),
        initial_clipped: 0,
        projection_activations: activations,
        stages,
    })
}

/// Discrete Euler-Lagrange residuals of a stream field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    /// `max |Lψ − f(ψ)|` over free interior nodes whose whole stencil has `ψ > ε`.
    pub interior_max: f64,
    pub interior_rms: f64,
    pub interior_nodes: usize,
    /// `min_φ [⟨−K∇ψ, ∇φ⟩ + ∫f(ψ)φ] / ∫φ` over nodal hat functions `φ` vanishing on `S`.
    pub subsolution_min: f64,
    pub subsolution_nodes: usize,
}

pub fn check_stationarity(
    psi: &StreamField,
    pitch: Pitch,
    profile: &VorticityProfile,
    epsilon: f64,
) -> StationarityReport {
    let grid = psi.grid_arc();
    let disc = Discretization::new(grid.clone(), pitch);
    let v = psi.values();
    let mut lpsi = vec![0.0; v.len()];
    disc.apply(v, &mut lpsi);
    let (nx, ny) = (grid.nx(), grid.ny());
    let (mut imax, mut isq, mut icount) = (0.0f64, 0.0, 0usize);
    let mut smin = f64::INFINITY;
    let mut scount = 0;
    for n in 0..v.len() {
        if !grid.is_free(n) {
            continue;
        }
        let f = profile.eval(v[n]).f;
        let w = disc.weight(n);
        smin = smin.min(-lpsi[n] / w + f);
        scount += 1;
        if !grid.is_interior(n) {
            continue;
        }
        let (i, j) = grid.coords(n);
        if i == 0 || j == 0 || i == nx || j == ny {
            continue;
        }
        let bulk = (j - 1..=j + 1).all(|jj| (i - 1..=i + 1).all(|ii| v[grid.index(ii, jj)] > epsilon));
        if bulk {
            let r = lpsi[n] - f;
            imax = imax.max(r.abs());
            isq += r * r;
            icount += 1;
        }
    }
    StationarityReport {
        interior_max: imax,
        interior_rms: if icount > 0 { (isq / icount as f64).sqrt() } else { 0.0 },
        interior_nodes: icount,
        subsolution_min: if scount > 0 { smin } else { 0.0 },
        subsolution_nodes: scount,
    }
}
