//! Node-based discretization of the cross-section.
//!
//! `ψ` lives on the nodes of a uniform grid. Cells whose four corners all lie
//! in the domain mask are *active*; the discrete energy is a sum over active
//! cells. Within a cell the axial coefficients `k11`, `k22` act on the two
//! edge differences parallel to their axis, and the mixed coefficient `k12`
//! acts on the cell-centred gradient, which yields a symmetric 9-point
//! stencil for `−div(K∇·)`.

mod energy;
mod grid;
mod linsolve;
mod operator;

pub use energy::{energy_gradient, energy_value, ramp, ramp_slope, EnergyFunctional};
pub use grid::{
    BoundaryData, BoundaryRegion, CrossSectionGrid, DomainSpec, FixedBoundarySpec, FixedPiece,
    StreamField,
};
pub use linsolve::{conjugate_gradient, preconditioned_cg, CgOutcome, CsrMatrix};
pub use operator::{assemble_operator, solve_dirichlet, AssembledOperator, CellCoeffs, Discretization};

use serde::Serialize;

use crate::error::{Error, Result};

/// Smoothing width of the positivity indicator `H_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizationParams {
    pub epsilon: f64,
}

impl RegularizationParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config("regularization epsilon must be positive".into()));
        }
        Ok(Self { epsilon })
    }
}
