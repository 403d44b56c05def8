//! The solve, analyze, reconstruct and exact pipelines.

use std::path::{Path, PathBuf};

use helifb_core::discretization::energy_value;
use helifb_core::fb_analysis::{
    default_level, dyadic_radii, fb_condition_residual, flatness_profile, freeze_and_rectify, lipschitz_report,
    nearest_vertex, nondegeneracy_ratio, supported_radius, tangent_holder, weiss_energy, ResidualSummary,
};
use helifb_core::io::{fb_curve_csv, field3d_csv, read_json, read_stream_field, write_atomic, write_json, write_stream_field};
use helifb_core::reconstruct::{field_residuals, sample_lattice};
use helifb_core::{
    extract_free_boundary, minimize, velocity_cross_section, CrossSectionGrid, Error, FreeBoundaryCurve, Point2,
    RegularizationParams, Result, StreamField,
};
use serde::Deserialize;

use crate::config::{Problem, RunConfig};
use crate::report::{
    CurveCount, CurveDiagnostics, DiagnosticsDocument, FieldSummary, GridSummary, Header, LevelSensitivity,
    PointDiagnostics, ResidualsDocument, SolveDocument, SolveSummary, WeissSummary,
};

/// Progress lines on stderr unless quiet.
#[derive(Debug, Clone, Copy)]
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Result of a pipeline that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Outputs were written but the solver stopped before its tolerance.
    NotConverged,
}

/// Where the stream function is read from.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub psi: PathBuf,
    pub grid: PathBuf,
}

impl Inputs {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            psi: dir.join("psi.csv"),
            grid: dir.join("grid.json"),
        }
    }
}

fn grid_summary(grid: &CrossSectionGrid) -> GridSummary {
    GridSummary {
        nx: grid.nx(),
        ny: grid.ny(),
        h: grid.h(),
        mask_nodes: grid.mask().iter().filter(|&&m| m).count(),
        fixed_nodes: grid.dirichlet_count(),
    }
}

fn final_epsilon(config: &RunConfig, h: f64) -> f64 {
    config.solver.eps_floor * h
}

fn field_summary(psi: &StreamField, config: &RunConfig, p: &Problem) -> Result<FieldSummary> {
    let grid = psi.grid();
    let eps = final_epsilon(config, grid.h());
    let values = psi.values();
    let mask = || (0..grid.node_count()).filter(|&n| grid.in_mask(n));
    Ok(FieldSummary {
        psi_max: mask().map(|n| values[n]).fold(0.0, f64::max),
        positive_nodes: mask().filter(|&n| values[n] > 0.0).count(),
        energy: energy_value(psi, p.pitch, &p.profile, p.lambda, RegularizationParams::new(eps)?),
        epsilon: eps,
    })
}

fn level(config: &RunConfig, h: f64) -> f64 {
    config.diagnostics.level.unwrap_or_else(|| default_level(h, config.lambda))
}

pub fn run_solve(config: &RunConfig, out: &Path, log: Log) -> Result<Status> {
    let p = config.problem()?;
    log.info(format!(
        "solving on {}x{} grid (h = {}), {} fixed nodes",
        p.grid.nx(),
        p.grid.ny(),
        p.grid.h(),
        p.grid.dirichlet_count()
    ));
    let (psi, report) = minimize(&p.grid, p.pitch, &p.profile, p.lambda, &config.solver)?;
    log.info(format!(
        "{} after {} iterations, energy {:.12e}",
        if report.converged { "converged" } else { "not converged" },
        report.total_iterations,
        report.final_energy
    ));
    std::fs::create_dir_all(out)?;
    write_stream_field(out, &psi)?;
    let theta = level(config, p.grid.h());
    let curves = extract_free_boundary(&psi, theta);
    let doc = SolveDocument {
        header: Header::new("solve", config),
        converged: report.converged,
        grid: grid_summary(&p.grid),
        field: field_summary(&psi, config, &p)?,
        free_boundary: CurveCount {
            level: theta,
            curves: curves.len(),
            vertices: curves.iter().map(FreeBoundaryCurve::len).sum(),
        },
        solve: &report,
    };
    write_json(&out.join("solve_report.json"), &doc)?;
    log.info(format!("wrote psi.csv, grid.json, solve_report.json to {}", out.display()));
    Ok(if report.converged { Status::Ok } else { Status::NotConverged })
}

/// Loads `ψ` and checks that it lives on the grid the config describes.
fn load_field(config: &RunConfig, inputs: &Inputs) -> Result<(StreamField, Problem)> {
    let psi = read_stream_field(&inputs.psi, &inputs.grid)?;
    let p = config.problem()?;
    let g = psi.grid();
    let same = g.nx() == p.grid.nx()
        && g.ny() == p.grid.ny()
        && g.mask() == p.grid.mask()
        && (g.h() - p.grid.h()).abs() <= 1e-12 * p.grid.h()
        && (g.origin() - p.grid.origin()).norm() <= 1e-12;
    if !same {
        return Err(Error::Input(format!(
            "{} does not describe the grid of this config",
            inputs.grid.display()
        )));
    }
    psi.check_admissible()?;
    Ok((psi, p))
}

#[derive(Deserialize)]
struct SolveFile {
    solve: SolveSummary,
}

fn point_diagnostics(
    psi: &StreamField,
    p: &Problem,
    config: &RunConfig,
    target: Option<[f64; 2]>,
    x0: Point2,
) -> PointDiagnostics {
    let h = psi.grid().h();
    let d = &config.diagnostics;
    let r_min = d.r_min_cells * h;
    let lambda = p.lambda.lambda();
    let reach = supported_radius(&psi, x0, d.r_max, 1e-3 * h);
    let radii: Vec<f64> = dyadic_radii(d.r_max, r_min).into_iter().filter(|&r| r <= reach).collect();
    let rect = freeze_and_rectify(psi, x0, p.pitch);
    let rect_reach = supported_radius(&rect, Point2::new(0.0, 0.0), d.r_max, 1e-3 * h);
    let weiss_radii: Vec<f64> = dyadic_radii(d.r_max, r_min).into_iter().filter(|&r| r <= rect_reach).collect();
    let nonempty = |v: &Vec<f64>| !v.is_empty();
    PointDiagnostics {
        target,
        x0,
        supported_radius: reach,
        flatness: Some(&radii)
            .filter(|r| nonempty(r))
            .and_then(|r| flatness_profile(&psi, x0, p.pitch, lambda, r, &d.flatness).ok()),
        weiss: Some(&weiss_radii)
            .filter(|r| nonempty(r))
            .and_then(|r| weiss_energy(&rect, lambda, r).ok())
            .map(|w| WeissSummary {
                spread: w.spread(),
                almost_monotonicity_constant: w.almost_monotonicity_constant(),
                profile: w,
            }),
        nondegeneracy: Some(&radii)
            .filter(|r| nonempty(r))
            .and_then(|r| nondegeneracy_ratio(&psi, x0, r).ok()),
    }
}

/// Vertices at evenly spaced arclength fractions of the longest curve.
fn auto_points(curves: &[FreeBoundaryCurve], count: usize) -> Vec<Point2> {
    let Some(c) = curves.iter().max_by(|a, b| a.length().total_cmp(&b.length())) else {
        return Vec::new();
    };
    let total = c.length();
    let mut arc = Vec::with_capacity(c.len());
    let mut s = 0.0;
    arc.push(0.0);
    for (a, b) in c.segments().take(c.len() - 1) {
        s += (b - a).norm();
        arc.push(s);
    }
    (0..count)
        .map(|k| {
            let want = total * (k as f64 + 0.5) / count as f64;
            let i = arc
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - want).abs().total_cmp(&(b.1 - want).abs()))
                .map_or(0, |(i, _)| i);
            c.vertices[i]
        })
        .collect()
}

fn residuals_at(psi: &StreamField, p: &Problem, theta: f64, tau: f64) -> (Vec<FreeBoundaryCurve>, Option<ResidualSummary>) {
    let mut curves = extract_free_boundary(psi, theta);
    for c in curves.iter_mut() {
        fb_condition_residual(psi, c, p.pitch, p.lambda.lambda(), tau);
    }
    let summary = (!curves.is_empty())
        .then(|| ResidualSummary::from_values(curves.iter().flat_map(|c| c.residuals.iter().copied())));
    (curves, summary)
}

pub fn run_analyze(config: &RunConfig, inputs: &Inputs, out: &Path, log: Log) -> Result<Status> {
    let (psi, p) = load_field(config, inputs)?;
    let h = psi.grid().h();
    let theta = level(config, h);
    let tau = final_epsilon(config, h);
    let solve = inputs
        .psi
        .parent()
        .map(|d| d.join("solve_report.json"))
        .filter(|f| f.is_file())
        .map(|f| read_json::<SolveFile>(&f).map(|s| s.solve))
        .transpose()?;

    let (curves, fb_residual) = residuals_at(&psi, &p, theta, tau);
    let (quarter, quarter_residual) = residuals_at(&psi, &p, 0.5 * theta, tau);
    log.info(format!(
        "{} free boundary curve(s) at level {theta:e}, {} vertices",
        curves.len(),
        curves.iter().map(FreeBoundaryCurve::len).sum::<usize>()
    ));

    let curve_diagnostics = curves
        .iter()
        .map(|c| CurveDiagnostics {
            closed: c.closed,
            vertices: c.len(),
            length: c.length(),
            residual: ResidualSummary::from_values(c.residuals.iter().copied()),
            tangent_holder: tangent_holder(c, 4.0 * h, 0.25 * c.length()),
        })
        .collect();

    let targets: Vec<(Option<[f64; 2]>, Point2)> = if config.diagnostics.points.is_empty() {
        auto_points(&curves, config.diagnostics.auto_points).into_iter().map(|x| (None, x)).collect()
    } else {
        config
            .diagnostics
            .points
            .iter()
            .filter_map(|&t| nearest_vertex(&curves, Point2::new(t[0], t[1])).map(|x| (Some(t), x)))
            .collect()
    };
    let points: Vec<PointDiagnostics> = targets
        .into_iter()
        .map(|(t, x0)| point_diagnostics(&psi, &p, config, t, x0))
        .collect();
    let c0 = points
        .iter()
        .filter_map(|q| q.nondegeneracy.as_ref().map(|n| n.c0))
        .reduce(f64::min);

    let doc = DiagnosticsDocument {
        header: Header::new("analyze", config),
        solve,
        grid: grid_summary(psi.grid()),
        field: field_summary(&psi, config, &p)?,
        level: theta,
        residual_tau: tau,
        empty_free_boundary: curves.is_empty(),
        curves: curve_diagnostics,
        fb_residual,
        level_sensitivity: LevelSensitivity {
            level: 0.5 * theta,
            curves: quarter.len(),
            vertices: quarter.iter().map(FreeBoundaryCurve::len).sum(),
            length: quarter.iter().map(FreeBoundaryCurve::length).sum(),
            residual: quarter_residual,
        },
        lipschitz: lipschitz_report(&psi, None),
        points,
        c0,
    };
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("fb_curve.csv"), fb_curve_csv(&curves).as_bytes())?;
    write_json(&out.join("diagnostics.json"), &doc)?;
    if doc.empty_free_boundary {
        log.info("no free boundary found; wrote an empty-free-boundary report");
    }
    log.info(format!("wrote diagnostics.json, fb_curve.csv to {}", out.display()));
    Ok(Status::Ok)
}

pub fn run_reconstruct(config: &RunConfig, inputs: &Inputs, out: &Path, log: Log) -> Result<Status> {
    let (psi, p) = load_field(config, inputs)?;
    let h = psi.grid().h();
    let rc = &config.reconstruct;
    let mut probes = rc.probes.clone();
    probes.epsilon = rc.epsilon.unwrap_or_else(|| final_epsilon(config, h));
    let residuals = field_residuals(&psi, p.pitch, &p.profile, &probes)?;
    let velocity = velocity_cross_section(&psi, p.pitch);
    let samples = sample_lattice(&velocity, rc.sample_spacing * h, &probes.z_levels);
    log.info(format!(
        "{} probes, {} samples; max |u.xi| {:e}, max |div u| {:e}",
        residuals.probes,
        samples.len(),
        residuals.orthogonality,
        residuals.divergence
    ));
    let doc = ResidualsDocument {
        header: Header::new("reconstruct", config),
        grid: grid_summary(psi.grid()),
        epsilon: probes.epsilon,
        samples: samples.len(),
        residuals,
    };
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("field3d.csv"), field3d_csv(&samples).as_bytes())?;
    write_json(&out.join("residuals.json"), &doc)?;
    log.info(format!("wrote field3d.csv, residuals.json to {}", out.display()));
    Ok(Status::Ok)
}

/// Samples the `[exact]` solution on the configured grid.
pub fn run_exact(config: &RunConfig, out: &Path, log: Log) -> Result<Status> {
    let exact = config
        .exact
        .ok_or_else(|| Error::Config("the exact command needs an [exact] section".into()))?;
    let p = config.problem()?;
    let f = exact.field(p.pitch, p.lambda);
    let mut psi = StreamField::from_fn(p.grid.clone(), f);
    // fixed nodes keep the data exactly as recorded in grid.json
    for (v, d) in psi.values_mut().iter_mut().zip(p.grid.dirichlet()) {
        if let Some(g) = d {
            *v = *g;
        }
    }
    std::fs::create_dir_all(out)?;
    write_stream_field(out, &psi)?;
    log.info(format!("wrote exact psi.csv, grid.json to {}", out.display()));
    Ok(Status::Ok)
}

/// Config and profile checks only.
pub fn run_validate(config: &RunConfig, log: Log) -> Result<Status> {
    let p = config.problem()?;
    log.info(format!(
        "config ok: {}x{} grid, {} mask nodes, {} fixed, profile {}",
        p.grid.nx(),
        p.grid.ny(),
        p.grid.mask().iter().filter(|&&m| m).count(),
        p.grid.dirichlet_count(),
        p.profile.name()
    ));
    Ok(Status::Ok)
}
