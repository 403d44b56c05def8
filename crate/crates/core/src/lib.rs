//! Numerical toolkit for the one-phase semilinear free boundary problem that
//! arises from helically symmetric steady Euler flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`helix`]: screw motions, the symmetry tangent field and helicity checks.
//! * [`coefficients`]: the coefficient matrix `K(x, y)` and vorticity profiles.
//! * [`discretization`]: grids, the anisotropic operator, the regularized energy.
//! * [`minimizer`]: projected Newton (or Barzilai-Borwein) descent with ε-continuation.
//! * [`fb_analysis`]: free boundary extraction and regularity diagnostics.
//! * [`reconstruct`]: recovery of the 3D helical velocity field.
//!
//! [`exact`] holds closed-form reference solutions used by tests and the CLI,
//! and [`io`] the CSV/JSON exchange formats.

pub mod coefficients;
pub mod discretization;
pub mod error;
pub mod exact;
pub mod fb_analysis;
pub mod field;
pub mod helix;
pub mod io;
pub mod minimizer;
pub mod reconstruct;

pub use coefficients::{
    coeff_matrix, coeff_sqrt, ellipticity_bounds, BernoulliConstant, CoeffMatrix,
    EllipticityBounds, ProfileSample, VorticityProfile,
};
pub use discretization::{
    CrossSectionGrid, DomainSpec, FixedBoundarySpec, RegularizationParams, StreamField,
};
pub use error::{Error, Result};
pub use field::{PlanarField, Point2};
pub use helix::{Pitch, Point3, ScrewMotion, Vector3};
pub use fb_analysis::{extract_free_boundary, FreeBoundaryCurve};
pub use minimizer::{minimize, Method, SolveReport, SolverConfig};
pub use reconstruct::{velocity_at, velocity_cross_section, FieldResidualReport, HelicalVelocitySample};
