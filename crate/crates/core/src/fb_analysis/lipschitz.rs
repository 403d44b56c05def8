use serde::Serialize;

use crate::discretization::StreamField;
use crate::field::Point2;

/// Squared-distance transform of a 1D sampled function (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let mut first = None;
    for q in 0..n {
        if f[q].is_finite() {
            first = Some(q);
            break;
        }
    }
    let Some(q0) = first else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    v[0] = q0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in q0 + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance (in grid units) from every node to the nearest seed node.
pub fn distance_transform(nx: usize, ny: usize, seed: &[bool]) -> Vec<f64> {
    let (w, hgt) = (nx + 1, ny + 1);
    let mut d: Vec<f64> = seed.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let mut col = vec![0.0; hgt];
    let mut out = vec![0.0; hgt.max(w)];
    for i in 0..w {
        for j in 0..hgt {
            col[j] = d[j * w + i];
        }
        edt_1d(&col, &mut out[..hgt]);
        for j in 0..hgt {
            d[j * w + i] = out[j];
        }
    }
    let mut row = vec![0.0; w];
    for j in 0..hgt {
        row.copy_from_slice(&d[j * w..(j + 1) * w]);
        edt_1d(&row, &mut out[..w]);
        d[j * w..(j + 1) * w].copy_from_slice(&out[..w]);
    }
    d.into_iter().map(f64::sqrt).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub grad_sup: f64,
    pub grad_sup_at: Point2,
    /// `sup ψ(X) / dist(X, {ψ = 0})`; `None` when the zero set is empty.
    pub ratio_sup: Option<f64>,
    pub ratio_sup_at: Option<Point2>,
}

/// Lipschitz quantities of `ψ` over the ball `neighborhood` (whole grid if `None`).
pub fn lipschitz_report(psi: &StreamField, neighborhood: Option<(Point2, f64)>) -> LipschitzReport {
    let grid = psi.grid();
    let v = psi.values();
    let inside = |p: Point2| neighborhood.map_or(true, |(c, r)| (p - c).norm() <= r);
    let (mut grad_sup, mut grad_at) = (0.0, Point2::default());
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if !grid.cell_active(i, j) {
                continue;
            }
            let c = grid.cell_center(i, j);
            if !inside(c) {
                continue;
            }
            let g = psi.cell_gradient(i, j);
            let m = g[0].hypot(g[1]);
            if m > grad_sup {
                grad_sup = m;
                grad_at = c;
            }
        }
    }
    let zero: Vec<bool> = (0..grid.node_count()).map(|n| grid.in_mask(n) && v[n] <= 0.0).collect();
    let (mut ratio_sup, mut ratio_at) = (None, None);
    if zero.iter().any(|&z| z) {
        let dist = distance_transform(grid.nx(), grid.ny(), &zero);
        let h = grid.h();
        let mut best = 0.0;
        let mut at = None;
        for n in 0..grid.node_count() {
            if !grid.in_mask(n) || v[n] <= 0.0 {
                continue;
            }
            let p = grid.node_position(n);
            if !inside(p) {
                continue;
            }
            let q = v[n] / (dist[n] * h);
            if q > best {
                best = q;
                at = Some(p);
            }
        }
        ratio_sup = Some(best);
        ratio_at = at;
    }
    LipschitzReport {
        grad_sup,
        grad_sup_at: grad_at,
        ratio_sup,
        ratio_sup_at: ratio_at,
    }
}
