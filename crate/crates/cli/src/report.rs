//! JSON report documents. Every document carries `schema_version` and a
//! matching schema under `schemas/`.

use helifb_core::fb_analysis::{
    FlatnessReport, HolderFit, LipschitzReport, NondegeneracyProfile, ResidualSummary, WeissProfile,
};
use helifb_core::{FieldResidualReport, Point2, SolveReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub use helifb_core::io::SCHEMA_VERSION;

pub const TOOL: &str = "helifb";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Header<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
}

impl<'a> Header<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL,
            tool_version: TOOL_VERSION,
            command,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub mask_nodes: usize,
    pub fixed_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    pub psi_max: f64,
    pub positive_nodes: usize,
    /// Regularised energy at the final continuation width.
    pub energy: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveCount {
    pub level: f64,
    pub curves: usize,
    pub vertices: usize,
}

/// `solve_report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveDocument<'a> {
    #[serde(flatten)]
    pub header: Header<'a>,
    pub converged: bool,
    pub grid: GridSummary,
    pub field: FieldSummary,
    pub free_boundary: CurveCount,
    pub solve: &'a SolveReport,
}

/// The part of `solve_report.json` echoed into the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub final_energy: f64,
    pub final_projected_gradient: f64,
    pub total_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveDiagnostics {
    pub closed: bool,
    pub vertices: usize,
    pub length: f64,
    pub residual: ResidualSummary,
    pub tangent_holder: Option<HolderFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSensitivity {
    pub level: f64,
    pub curves: usize,
    pub vertices: usize,
    pub length: f64,
    pub residual: Option<ResidualSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeissSummary {
    #[serde(flatten)]
    pub profile: WeissProfile,
    pub spread: f64,
    pub almost_monotonicity_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointDiagnostics {
    /// Requested location, if the point came from the config.
    pub target: Option<[f64; 2]>,
    pub x0: Point2,
    /// Largest disc about `x0` covered by the grid, capped at `r_max`.
    pub supported_radius: f64,
    pub flatness: Option<FlatnessReport>,
    pub weiss: Option<WeissSummary>,
    pub nondegeneracy: Option<NondegeneracyProfile>,
}

/// `diagnostics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsDocument<'a> {
    #[serde(flatten)]
    pub header: Header<'a>,
    pub solve: Option<SolveSummary>,
    pub grid: GridSummary,
    pub field: FieldSummary,
    pub level: f64,
    pub residual_tau: f64,
    pub empty_free_boundary: bool,
    pub curves: Vec<CurveDiagnostics>,
    pub fb_residual: Option<ResidualSummary>,
    pub level_sensitivity: LevelSensitivity,
    pub lipschitz: LipschitzReport,
    pub points: Vec<PointDiagnostics>,
    /// Smallest non-degeneracy ratio over all points and radii.
    pub c0: Option<f64>,
}

/// `residuals.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualsDocument<'a> {
    #[serde(flatten)]
    pub header: Header<'a>,
    pub grid: GridSummary,
    pub epsilon: f64,
    pub samples: usize,
    pub residuals: FieldResidualReport,
}
