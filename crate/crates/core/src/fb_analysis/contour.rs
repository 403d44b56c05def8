use std::collections::HashMap;

use serde::Serialize;

use crate::discretization::StreamField;
use crate::field::Point2;

/// Polyline approximation of a component of `∂{ψ > θ}`, positive side on the left.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeBoundaryCurve {
    pub vertices: Vec<Point2>,
    pub closed: bool,
    /// `⟨K∇ψ, ∇ψ⟩ − λ²` per vertex, once computed; `None` where the stencil left the grid.
    pub residuals: Vec<Option<f64>>,
}

impl FreeBoundaryCurve {
    pub fn new(vertices: Vec<Point2>, closed: bool) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            closed,
            residuals: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Segments as consecutive vertex pairs, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }
}

/// Default extraction level `θ = hλ/2`.
pub fn default_level(h: f64, lambda: f64) -> f64 {
    0.5 * h * lambda
}

struct Segment {
    from_edge: usize,
    to_edge: usize,
    from: Point2,
    to: Point2,
}

/// Marching-squares extraction of `{ψ = θ}` over the active cells.
pub fn extract_free_boundary(psi: &StreamField, theta: f64) -> Vec<FreeBoundaryCurve> {
    let grid = psi.grid();
    let v = psi.values();
    let (nx, ny) = (grid.nx(), grid.ny());
    let row = nx + 1;
    // cell edges counter-clockwise: bottom, right, top, left
    let edge_id = |i: usize, j: usize, k: usize| -> usize {
        match k {
            0 => 2 * (j * row + i),
            1 => 2 * (j * row + i + 1) + 1,
            2 => 2 * ((j + 1) * row + i),
            _ => 2 * (j * row + i) + 1,
        }
    };
    let mut segments: Vec<Segment> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !grid.cell_active(i, j) {
                continue;
            }
            let corners = grid.cell_corners(i, j);
            let vals = corners.map(|n| v[n]);
            let above = vals.map(|x| x > theta);
            if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
                continue;
            }
            let pos = corners.map(|n| grid.node_position(n));
            // crossings in counter-clockwise order; `true` marks above → below
            let mut crossings: Vec<(usize, bool, Point2)> = Vec::with_capacity(4);
            for k in 0..4 {
                let k1 = (k + 1) % 4;
                if above[k] != above[k1] {
                    let t = (theta - vals[k]) / (vals[k1] - vals[k]);
                    let p = pos[k] + (pos[k1] - pos[k]) * t;
                    crossings.push((edge_id(i, j, k), above[k], p));
                }
            }
            let m = crossings.len();
            let center_above = vals.iter().sum::<f64>() / 4.0 > theta;
            for a in 0..m {
                if !crossings[a].1 {
                    continue;
                }
                let b = if center_above { (a + 1) % m } else { (a + m - 1) % m };
                segments.push(Segment {
                    from_edge: crossings[a].0,
                    to_edge: crossings[b].0,
                    from: crossings[a].2,
                    to: crossings[b].2,
                });
            }
        }
    }
    chain(segments)
}

fn chain(segments: Vec<Segment>) -> Vec<FreeBoundaryCurve> {
    let mut by_start: HashMap<usize, usize> = HashMap::with_capacity(segments.len());
    let mut has_incoming = vec![false; segments.len()];
    for (k, s) in segments.iter().enumerate() {
        by_start.insert(s.from_edge, k);
    }
    for s in &segments {
        if let Some(&k) = by_start.get(&s.to_edge) {
            has_incoming[k] = true;
        }
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let trace = |start: usize, used: &mut Vec<bool>| {
        let mut vertices = vec![segments[start].from];
        let mut k = start;
        let mut closed = false;
        loop {
            used[k] = true;
            vertices.push(segments[k].to);
            match by_start.get(&segments[k].to_edge) {
                Some(&next) if next == start => {
                    closed = true;
                    vertices.pop();
                    break;
                }
                Some(&next) if !used[next] => k = next,
                _ => break,
            }
        }
        FreeBoundaryCurve::new(vertices, closed)
    };
    // open curves start where nothing leads in, then the remaining loops
    for k in 0..segments.len() {
        if !used[k] && !has_incoming[k] {
            curves.push(trace(k, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            curves.push(trace(k, &mut used));
        }
    }
    curves
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::discretization::{CrossSectionGrid, DomainSpec, FixedBoundarySpec};
    use crate::field::PlanarField;

    fn square(h: f64) -> Arc<CrossSectionGrid> {
        let d = DomainSpec::Rectangle {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        };
        Arc::new(CrossSectionGrid::build(&d, h, &FixedBoundarySpec::new()).unwrap())
    }

    #[test]
    fn disc_gives_one_counter_clockwise_loop() {
        let g = square(1.0 / 32.0);
        let psi = StreamField::from_fn(g, |p| (0.5 - p.norm()).max(0.0));
        let curves = extract_free_boundary(&psi, 0.01);
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!(c.closed);
        let mut area = 0.0;
        for (a, b) in c.segments() {
            area += a.x * b.y - a.y * b.x;
            assert!((b - a).norm() <= 2.0 / 32.0);
        }
        // positive set on the left means counter-clockwise around the disc
        assert!(area > 0.0);
        for p in &c.vertices {
            assert!((psi.value(*p).unwrap() - 0.01).abs() < 1e-10);
        }
    }

    #[test]
    fn hole_is_clockwise() {
        let g = square(1.0 / 32.0);
        let psi = StreamField::from_fn(g, |p| (p.norm() - 0.5).max(0.0));
        let curves = extract_free_boundary(&psi, 0.01);
        assert_eq!(curves.len(), 1);
        let area: f64 = curves[0].segments().map(|(a, b)| a.x * b.y - a.y * b.x).sum();
        assert!(area < 0.0);
    }

    #[test]
    fn constant_field_has_no_curve() {
        let g = square(0.25);
        assert!(extract_free_boundary(&StreamField::from_fn(g.clone(), |_| 1.0), 0.1).is_empty());
        assert!(extract_free_boundary(&StreamField::zeros(g), 0.1).is_empty());
    }

    #[test]
    fn saddle_cells_produce_two_open_curves() {
        let g = square(1.0 / 8.0);
        let psi = StreamField::from_fn(g, |p| p.x * p.y + 0.001);
        let curves = extract_free_boundary(&psi, 0.0);
        assert_eq!(curves.len(), 2);
        assert!(curves.iter().all(|c| !c.closed));
    }
}
