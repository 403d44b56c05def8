//! Free boundary extraction and the regularity diagnostics evaluated on it.

mod blowup;
mod contour;
mod lipschitz;
mod residual;

pub use blowup::{
    blowup_rescale, coefficient_flatness, dyadic_radii, flatness_deficit, flatness_profile,
    freeze_and_rectify, nondegeneracy_ratio, supported_radius, weiss_energy, BlowUp,
    FlatnessOptions, FlatnessReport, FlatnessResult, NondegeneracyProfile, RectifiedField,
    WeissProfile, CIRCLE_POINTS, WEISS_RINGS,
};
pub use contour::{default_level, extract_free_boundary, FreeBoundaryCurve};
pub use lipschitz::{distance_transform, lipschitz_report, LipschitzReport};
pub use residual::{
    fb_condition_residual, positive_side_gradient, tangent_holder, HolderFit, ResidualSummary,
};

use crate::field::Point2;

/// Vertex of `curves` closest to `target`.
pub fn nearest_vertex(curves: &[FreeBoundaryCurve], target: Point2) -> Option<Point2> {
    curves
        .iter()
        .flat_map(|c| c.vertices.iter().copied())
        .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
}
