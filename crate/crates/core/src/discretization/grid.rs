use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{PlanarField, Point2};

/// Geometric description of the cross-section domain `D`.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// `r_inner ≤ |X − center| ≤ r_outer`, resolved by the node mask.
    Annulus {
        center: Point2,
        r_inner: f64,
        r_outer: f64,
    },
    /// Simple polygon, vertices in either orientation.
    Polygon { vertices: Vec<Point2> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryRegion {
    Left,
    Right,
    Bottom,
    Top,
    InnerRing,
    OuterRing,
    /// Every node of the mask boundary.
    All,
    /// Explicit `(i, j)` node indices; each must lie on the mask boundary.
    Nodes(Vec<(usize, usize)>),
}

#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    Function(Arc<dyn Fn(Point2) -> f64 + Send + Sync>),
}

impl BoundaryData {
    pub fn function(f: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    fn eval(&self, p: Point2) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Function(f) => f(p),
        }
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPiece {
    pub region: BoundaryRegion,
    pub data: BoundaryData,
}

/// The fixed boundary portion `S` with its Dirichlet data. Later pieces win
/// where pieces overlap.
#[derive(Debug, Clone, Default)]
pub struct FixedBoundarySpec {
    pub pieces: Vec<FixedPiece>,
}

impl FixedBoundarySpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, region: BoundaryRegion, data: BoundaryData) -> Self {
        self.pieces.push(FixedPiece { region, data });
        self
    }

    pub fn constant(self, region: BoundaryRegion, value: f64) -> Self {
        self.with(region, BoundaryData::Constant(value))
    }
}

/// Uniform node grid over the cross-section with a domain mask and Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionGrid {
    origin: Point2,
    h: f64,
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
    dirichlet: Vec<Option<f64>>,
    active: Vec<bool>,
    cell_count: Vec<u8>,
}

const GEOM_TOL: f64 = 1e-9;

fn point_in_polygon(p: Point2, vertices: &[Point2], tol: f64) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        // on-edge test
        let ab = b - a;
        let ap = p - a;
        let len2 = ab.dot(ab);
        let t = (ap.dot(ab) / len2).clamp(0.0, 1.0);
        if (ap - ab * t).norm() <= tol {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

impl CrossSectionGrid {
    /// Builds the node mask for `domain` at spacing `h` and applies `fixed`.
    pub fn build(domain: &DomainSpec, h: f64, fixed: &FixedBoundarySpec) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config("grid spacing h must be positive".into()));
        }
        let (origin, nx, ny, inside): (Point2, usize, usize, Box<dyn Fn(Point2) -> bool>) =
            match domain {
                DomainSpec::Rectangle {
                    x_min,
                    x_max,
                    y_min,
                    y_max,
                } => {
                    let (w, ht) = (x_max - x_min, y_max - y_min);
                    if !(w > 0.0 && ht > 0.0) {
                        return Err(Error::Config("rectangle is degenerate".into()));
                    }
                    let nx = (w / h).round() as usize;
                    let ny = (ht / h).round() as usize;
                    if nx == 0
                        || ny == 0
                        || (nx as f64 * h - w).abs() > 1e-9 * w.max(1.0)
                        || (ny as f64 * h - ht).abs() > 1e-9 * ht.max(1.0)
                    {
                        return Err(Error::Config(format!(
                            "grid spacing {h} does not divide the rectangle {w} x {ht}"
                        )));
                    }
                    (Point2::new(*x_min, *y_min), nx, ny, Box::new(|_| true))
                }
                DomainSpec::Annulus {
                    center,
                    r_inner,
                    r_outer,
                } => {
                    if !(*r_inner >= 0.0 && r_outer > r_inner) {
                        return Err(Error::Config("annulus radii must satisfy 0 <= r_inner < r_outer".into()));
                    }
                    let n = (2.0 * r_outer / h - GEOM_TOL).ceil() as usize;
                    let half = 0.5 * n as f64 * h;
                    let origin = Point2::new(center.x - half, center.y - half);
                    let (c, ri, ro) = (*center, *r_inner, *r_outer);
                    (
                        origin,
                        n,
                        n,
                        Box::new(move |p: Point2| {
                            let r = (p - c).norm();
                            r >= ri - GEOM_TOL * h && r <= ro + GEOM_TOL * h
                        }),
                    )
                }
                DomainSpec::Polygon { vertices } => {
                    if vertices.len() < 3 {
                        return Err(Error::Config("polygon needs at least three vertices".into()));
                    }
                    let mut area = 0.0;
                    for k in 0..vertices.len() {
                        let a = vertices[k];
                        let b = vertices[(k + 1) % vertices.len()];
                        area += a.x * b.y - a.y * b.x;
                    }
                    if area.abs() < 1e-14 {
                        return Err(Error::Config("polygon is degenerate".into()));
                    }
                    let xmin = vertices.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
                    let xmax = vertices.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
                    let ymin = vertices.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
                    let ymax = vertices.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
                    let nx = ((xmax - xmin) / h - GEOM_TOL).ceil().max(1.0) as usize;
                    let ny = ((ymax - ymin) / h - GEOM_TOL).ceil().max(1.0) as usize;
                    let verts = vertices.clone();
                    (
                        Point2::new(xmin, ymin),
                        nx,
                        ny,
                        Box::new(move |p| point_in_polygon(p, &verts, GEOM_TOL * h)),
                    )
                }
            };

        let nodes = (nx + 1) * (ny + 1);
        let mut grid = Self {
            origin,
            h,
            nx,
            ny,
            mask: vec![false; nodes],
            dirichlet: vec![None; nodes],
            active: vec![false; nx * ny],
            cell_count: vec![0; nodes],
        };
        for j in 0..=ny {
            for i in 0..=nx {
                let n = grid.index(i, j);
                grid.mask[n] = inside(grid.position(i, j));
            }
        }
        grid.refresh_cells();
        // drop nodes that touch no active cell
        for n in 0..nodes {
            if grid.cell_count[n] == 0 {
                grid.mask[n] = false;
            }
        }
        if !grid.mask.iter().any(|&m| m) {
            return Err(Error::Config("domain contains no active grid cell".into()));
        }
        grid.apply_fixed(domain, fixed)?;
        Ok(grid)
    }

    /// Rebuilds a grid from stored metadata (see [`crate::io`]).
    pub fn from_parts(
        origin: Point2,
        h: f64,
        nx: usize,
        ny: usize,
        mask: Vec<bool>,
        dirichlet: Vec<Option<f64>>,
    ) -> Result<Self> {
        let nodes = (nx + 1) * (ny + 1);
        if !(h > 0.0) || mask.len() != nodes || dirichlet.len() != nodes {
            return Err(Error::Input("grid metadata is inconsistent".into()));
        }
        let mut grid = Self {
            origin,
            h,
            nx,
            ny,
            mask,
            dirichlet,
            active: vec![false; nx * ny],
            cell_count: vec![0; nodes],
        };
        grid.refresh_cells();
        for n in 0..nodes {
            if let Some(g) = grid.dirichlet[n] {
                if !grid.mask[n] || !grid.is_mask_boundary(n) {
                    return Err(Error::Input("fixed boundary node is not on the mask boundary".into()));
                }
                if g < 0.0 {
                    return Err(Error::Admissibility("negative Dirichlet value".into()));
                }
            }
        }
        Ok(grid)
    }

    fn refresh_cells(&mut self) {
        self.cell_count.iter_mut().for_each(|c| *c = 0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let corners = self.cell_corners(i, j);
                let on = corners.iter().all(|&n| self.mask[n]);
                self.active[j * self.nx + i] = on;
                if on {
                    for n in corners {
                        self.cell_count[n] += 1;
                    }
                }
            }
        }
    }

    fn apply_fixed(&mut self, domain: &DomainSpec, fixed: &FixedBoundarySpec) -> Result<()> {
        let boundary: Vec<usize> = (0..self.node_count())
            .filter(|&n| self.mask[n] && self.is_mask_boundary(n))
            .collect();
        for piece in &fixed.pieces {
            let selected: Vec<usize> = match &piece.region {
                BoundaryRegion::Left | BoundaryRegion::Right | BoundaryRegion::Bottom | BoundaryRegion::Top => {
                    if !matches!(domain, DomainSpec::Rectangle { .. }) {
                        return Err(Error::Config(format!(
                            "fixed boundary {:?} is only defined for rectangles",
                            piece.region
                        )));
                    }
                    boundary
                        .iter()
                        .copied()
                        .filter(|&n| {
                            let (i, j) = self.coords(n);
                            match piece.region {
                                BoundaryRegion::Left => i == 0,
                                BoundaryRegion::Right => i == self.nx,
                                BoundaryRegion::Bottom => j == 0,
                                _ => j == self.ny,
                            }
                        })
                        .collect()
                }
                BoundaryRegion::InnerRing | BoundaryRegion::OuterRing => {
                    let DomainSpec::Annulus {
                        center,
                        r_inner,
                        r_outer,
                    } = domain
                    else {
                        return Err(Error::Config(format!(
                            "fixed boundary {:?} is only defined for annuli",
                            piece.region
                        )));
                    };
                    let mid = 0.5 * (r_inner + r_outer);
                    let inner = matches!(piece.region, BoundaryRegion::InnerRing);
                    boundary
                        .iter()
                        .copied()
                        .filter(|&n| {
                            let r = (self.node_position(n) - *center).norm();
                            (r < mid) == inner
                        })
                        .collect()
                }
                BoundaryRegion::All => boundary.clone(),
                BoundaryRegion::Nodes(list) => {
                    let mut out = Vec::with_capacity(list.len());
                    for &(i, j) in list {
                        if i > self.nx || j > self.ny {
                            return Err(Error::Config(format!("fixed node ({i}, {j}) is off the grid")));
                        }
                        let n = self.index(i, j);
                        if !self.mask[n] || !self.is_mask_boundary(n) {
                            return Err(Error::Config(format!(
                                "fixed node ({i}, {j}) is not on the domain boundary"
                            )));
                        }
                        out.push(n);
                    }
                    out
                }
            };
            if selected.is_empty() {
                return Err(Error::Config(format!(
                    "fixed boundary {:?} selects no boundary node",
                    piece.region
                )));
            }
            for n in selected {
                let p = self.node_position(n);
                let g = piece.data.eval(p);
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::Admissibility(format!(
                        "Dirichlet value {g} at ({}, {}) must be finite and nonnegative",
                        p.x, p.y
                    )));
                }
                self.dirichlet[n] = Some(g);
            }
        }
        Ok(())
    }

    /// A mask node with at least one of its eight neighbours outside the mask.
    pub fn is_mask_boundary(&self, n: usize) -> bool {
        let (i, j) = self.coords(n);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii > self.nx as i64 || jj > self.ny as i64 {
                    return true;
                }
                if !self.mask[self.index(ii as usize, jj as usize)] {
                    return true;
                }
            }
        }
        false
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }
    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }
    #[inline]
    pub fn origin(&self) -> Point2 {
        self.origin
    }
    #[inline]
    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn coords(&self, n: usize) -> (usize, usize) {
        (n % (self.nx + 1), n / (self.nx + 1))
    }
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }
    #[inline]
    pub fn node_position(&self, n: usize) -> Point2 {
        let (i, j) = self.coords(n);
        self.position(i, j)
    }
    #[inline]
    pub fn in_mask(&self, n: usize) -> bool {
        self.mask[n]
    }
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
    #[inline]
    pub fn dirichlet_value(&self, n: usize) -> Option<f64> {
        self.dirichlet[n]
    }
    pub fn dirichlet(&self) -> &[Option<f64>] {
        &self.dirichlet
    }
    /// Mask node whose value is not prescribed.
    #[inline]
    pub fn is_free(&self, n: usize) -> bool {
        self.mask[n] && self.dirichlet[n].is_none()
    }
    pub fn dirichlet_count(&self) -> usize {
        self.dirichlet.iter().filter(|d| d.is_some()).count()
    }
    #[inline]
    pub fn cell_active(&self, i: usize, j: usize) -> bool {
        self.active[j * self.nx + i]
    }
    /// Number of active cells touching node `n` (0..=4).
    #[inline]
    pub fn cells_around(&self, n: usize) -> u8 {
        self.cell_count[n]
    }
    /// Node has all four surrounding cells active.
    #[inline]
    pub fn is_interior(&self, n: usize) -> bool {
        self.cell_count[n] == 4
    }
    /// Corners of cell `(i, j)` counter-clockwise from the lower-left.
    #[inline]
    pub fn cell_corners(&self, i: usize, j: usize) -> [usize; 4] {
        let n0 = self.index(i, j);
        [n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1]
    }
    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Active cell containing `p`, if any.
    pub fn locate(&self, p: Point2) -> Option<(usize, usize, f64, f64)> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if !(fx >= -1e-12 && fy >= -1e-12 && fx <= self.nx as f64 + 1e-12 && fy <= self.ny as f64 + 1e-12) {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        if !self.cell_active(i, j) {
            return None;
        }
        Some((i, j, (fx - i as f64).clamp(0.0, 1.0), (fy - j as f64).clamp(0.0, 1.0)))
    }

    /// Node nearest to `p` (not necessarily in the mask).
    pub fn nearest_node(&self, p: Point2) -> Option<usize> {
        let i = ((p.x - self.origin.x) / self.h).round();
        let j = ((p.y - self.origin.y) / self.h).round();
        if i < 0.0 || j < 0.0 || i > self.nx as f64 || j > self.ny as f64 {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        (
            self.origin,
            self.position(self.nx, self.ny),
        )
    }
}

/// Discrete stream function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamField {
    grid: Arc<CrossSectionGrid>,
    values: Vec<f64>,
}

impl StreamField {
    pub fn new(grid: Arc<CrossSectionGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Input(format!(
                "stream field has {} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<CrossSectionGrid>) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at mask nodes; nodes outside the mask hold 0.
    pub fn from_fn(grid: Arc<CrossSectionGrid>, f: impl Fn(Point2) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|n| if grid.in_mask(n) { f(grid.node_position(n)) } else { 0.0 })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &CrossSectionGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<CrossSectionGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `ψ ≥ 0` on the mask and `ψ = g` on the fixed boundary.
    pub fn check_admissible(&self) -> Result<()> {
        for n in 0..self.grid.node_count() {
            if !self.grid.in_mask(n) {
                continue;
            }
            let v = self.values[n];
            if !(v >= 0.0) {
                return Err(Error::Admissibility(format!("psi = {v} < 0 at node {n}")));
            }
            if let Some(g) = self.grid.dirichlet_value(n) {
                if v != g {
                    return Err(Error::Admissibility(format!(
                        "psi = {v} differs from Dirichlet value {g} at node {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Gradient at the centre of an active cell from its four corners.
    pub fn cell_gradient(&self, i: usize, j: usize) -> [f64; 2] {
        let [n0, n1, n2, n3] = self.grid.cell_corners(i, j);
        let v = &self.values;
        let h = self.grid.h();
        [
            ((v[n1] - v[n0]) + (v[n2] - v[n3])) / (2.0 * h),
            ((v[n3] - v[n0]) + (v[n2] - v[n1])) / (2.0 * h),
        ]
    }

    /// Average of the gradients of the active cells around node `n`.
    pub fn node_gradient(&self, n: usize) -> Option<[f64; 2]> {
        let g = &self.grid;
        let (i, j) = g.coords(n);
        let mut acc = [0.0, 0.0];
        let mut count = 0;
        for (ci, cj) in [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)] {
            if ci < g.nx() && cj < g.ny() && g.cell_active(ci, cj) {
                let cg = self.cell_gradient(ci, cj);
                acc[0] += cg[0];
                acc[1] += cg[1];
                count += 1;
            }
        }
        (count > 0).then(|| [acc[0] / count as f64, acc[1] / count as f64])
    }
}

impl PlanarField for StreamField {
    fn value(&self, p: Point2) -> Option<f64> {
        let (i, j, tx, ty) = self.grid.locate(p)?;
        let [n0, n1, n2, n3] = self.grid.cell_corners(i, j);
        let v = &self.values;
        Some(
            (1.0 - tx) * (1.0 - ty) * v[n0]
                + tx * (1.0 - ty) * v[n1]
                + tx * ty * v[n2]
                + (1.0 - tx) * ty * v[n3],
        )
    }

    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        let (i, j, tx, ty) = self.grid.locate(p)?;
        let [n0, n1, n2, n3] = self.grid.cell_corners(i, j);
        let v = &self.values;
        let h = self.grid.h();
        Some([
            ((1.0 - ty) * (v[n1] - v[n0]) + ty * (v[n2] - v[n3])) / h,
            ((1.0 - tx) * (v[n3] - v[n0]) + tx * (v[n2] - v[n1])) / h,
        ])
    }
}
