use std::sync::Arc;

use super::grid::{CrossSectionGrid, StreamField};
use super::linsolve::{conjugate_gradient, CgOutcome, CsrMatrix};
use crate::coefficients::coeff_matrix;
use crate::error::{Error, Result};
use crate::field::Point2;
use crate::helix::Pitch;

/// Coefficients of `K` at a cell centre.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellCoeffs {
    pub k11: f64,
    pub k12: f64,
    pub k22: f64,
}

impl CellCoeffs {
    /// Local 4×4 matrix `M` with `ψᵀMψ = h²·Q(ψ)` over the cell corners.
    pub fn local_matrix(&self) -> [[f64; 4]; 4] {
        const EA: [f64; 4] = [-1.0, 1.0, 0.0, 0.0];
        const EB: [f64; 4] = [0.0, 0.0, 1.0, -1.0];
        const EC: [f64; 4] = [-1.0, 0.0, 0.0, 1.0];
        const ED: [f64; 4] = [0.0, -1.0, 1.0, 0.0];
        const SX: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
        const SY: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];
        let mut m = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] = 0.5 * self.k11 * (EA[r] * EA[c] + EB[r] * EB[c])
                    + 0.5 * self.k22 * (EC[r] * EC[c] + ED[r] * ED[c])
                    + 0.25 * self.k12 * (SX[r] * SY[c] + SY[r] * SX[c]);
            }
        }
        m
    }

    /// `h²·Q` and its gradient with respect to the four corner values.
    #[inline]
    pub fn quadratic(&self, v: [f64; 4]) -> (f64, [f64; 4]) {
        let a = v[1] - v[0];
        let b = v[2] - v[3];
        let c = v[3] - v[0];
        let d = v[2] - v[1];
        let sx = a + b;
        let sy = c + d;
        let q = 0.5 * self.k11 * (a * a + b * b) + 0.5 * self.k22 * (c * c + d * d) + 0.5 * self.k12 * sx * sy;
        let ga = self.k11 * a + 0.5 * self.k12 * sy;
        let gb = self.k11 * b + 0.5 * self.k12 * sy;
        let gc = self.k22 * c + 0.5 * self.k12 * sx;
        let gd = self.k22 * d + 0.5 * self.k12 * sx;
        (q, [-(ga + gc), ga - gd, gb + gd, -gb + gc])
    }
}

/// Per-cell coefficients and lumped node weights for one grid and pitch.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Arc<CrossSectionGrid>,
    pitch: Pitch,
    cells: Vec<CellCoeffs>,
    weights: Vec<f64>,
}

impl Discretization {
    pub fn new(grid: Arc<CrossSectionGrid>, pitch: Pitch) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut cells = vec![CellCoeffs::default(); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if grid.cell_active(i, j) {
                    let k = coeff_matrix(grid.cell_center(i, j), pitch);
                    cells[j * nx + i] = CellCoeffs {
                        k11: k.k11,
                        k12: k.k12,
                        k22: k.k22,
                    };
                }
            }
        }
        let weights = (0..grid.node_count())
            .map(|n| f64::from(grid.cells_around(n)) / 4.0)
            .collect();
        Self {
            grid,
            pitch,
            cells,
            weights,
        }
    }

    pub fn grid(&self) -> &Arc<CrossSectionGrid> {
        &self.grid
    }
    pub fn pitch(&self) -> Pitch {
        self.pitch
    }
    pub fn cell(&self, i: usize, j: usize) -> CellCoeffs {
        self.cells[j * self.grid.nx() + i]
    }
    /// Fraction of the node's dual cell covered by active cells.
    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Visits every active cell with its corner indices and coefficients.
    pub fn for_each_cell(&self, mut f: impl FnMut([usize; 4], CellCoeffs)) {
        let g = &self.grid;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.cell_active(i, j) {
                    f(g.cell_corners(i, j), self.cells[j * g.nx() + i]);
                }
            }
        }
    }

    /// `out = Lψ` over all mask nodes, ignoring Dirichlet status.
    pub fn apply(&self, psi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let inv_h2 = 1.0 / (self.grid.h() * self.grid.h());
        self.for_each_cell(|nodes, k| {
            let v = nodes.map(|n| psi[n]);
            let (_, g) = k.quadratic(v);
            for (n, gn) in nodes.iter().zip(g) {
                // ∂(h²Q)/∂ψ = 2·(Mψ)
                out[*n] += 0.5 * gn * inv_h2;
            }
        });
    }

    /// Sum of `h²·Q` over the active cells.
    pub fn gradient_energy(&self, psi: &[f64]) -> f64 {
        let mut e = 0.0;
        self.for_each_cell(|nodes, k| {
            e += k.quadratic(nodes.map(|n| psi[n])).0;
        });
        e
    }
}

/// `L` restricted to the free nodes, with the Dirichlet coupling split off.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    disc: Discretization,
    matrix: CsrMatrix,
    free_nodes: Vec<usize>,
    free_index: Vec<Option<usize>>,
    /// `−L_{free,fixed}·g` for each free row.
    boundary_rhs: Vec<f64>,
}

impl AssembledOperator {
    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }
    pub fn free_index(&self, n: usize) -> Option<usize> {
        self.free_index[n]
    }

    /// Solves `(Lψ)_n = w_n·rhs(X_n)` on the free nodes with the grid's Dirichlet data.
    pub fn solve(&self, rhs: impl Fn(Point2) -> f64, rel_tol: f64) -> Result<(StreamField, CgOutcome)> {
        let grid = self.disc.grid();
        if grid.dirichlet_count() == 0 {
            return Err(Error::Config("Dirichlet solve needs a nonempty fixed boundary".into()));
        }
        let b: Vec<f64> = self
            .free_nodes
            .iter()
            .zip(&self.boundary_rhs)
            .map(|(&n, bc)| self.disc.weight(n) * rhs(grid.node_position(n)) + bc)
            .collect();
        let max_iter = 20 * self.free_nodes.len() + 100;
        let out = conjugate_gradient(&self.matrix, &b, None, rel_tol, max_iter)?;
        let mut values = vec![0.0; grid.node_count()];
        for n in 0..grid.node_count() {
            if let Some(g) = grid.dirichlet_value(n) {
                values[n] = g;
            }
        }
        for (k, &n) in self.free_nodes.iter().enumerate() {
            values[n] = out.solution[k];
        }
        Ok((StreamField::new(grid.clone(), values)?, out))
    }
}

/// Assembles `L ≈ −div(K∇·)` on the free nodes of `grid`.
pub fn assemble_operator(grid: &Arc<CrossSectionGrid>, pitch: Pitch) -> AssembledOperator {
    let disc = Discretization::new(grid.clone(), pitch);
    let mut free_index = vec![None; grid.node_count()];
    let mut free_nodes = Vec::new();
    for n in 0..grid.node_count() {
        if grid.is_free(n) {
            free_index[n] = Some(free_nodes.len());
            free_nodes.push(n);
        }
    }
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut triplets = Vec::with_capacity(16 * free_nodes.len());
    let mut boundary_rhs = vec![0.0; free_nodes.len()];
    disc.for_each_cell(|nodes, k| {
        let m = k.local_matrix();
        for (r, &nr) in nodes.iter().enumerate() {
            let Some(row) = free_index[nr] else { continue };
            for (c, &nc) in nodes.iter().enumerate() {
                let v = m[r][c] * inv_h2;
                match free_index[nc] {
                    Some(col) => triplets.push((row, col, v)),
                    None => boundary_rhs[row] -= v * grid.dirichlet_value(nc).unwrap_or(0.0),
                }
            }
        }
    });
    let nf = free_nodes.len();
    AssembledOperator {
        disc,
        matrix: CsrMatrix::from_triplets(nf, nf, triplets),
        free_nodes,
        free_index,
        boundary_rhs,
    }
}

/// Linear solve tolerance used by [`solve_dirichlet`].
pub const DIRICHLET_TOL: f64 = 1e-10;

/// Solves `L ψ = rhs` with the grid's Dirichlet data.
pub fn solve_dirichlet(
    grid: &Arc<CrossSectionGrid>,
    pitch: Pitch,
    rhs: impl Fn(Point2) -> f64,
) -> Result<StreamField> {
    assemble_operator(grid, pitch)
        .solve(rhs, DIRICHLET_TOL)
        .map(|(psi, _)| psi)
}
