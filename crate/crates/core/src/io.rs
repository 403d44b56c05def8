//! File formats: `psi.csv` + `grid.json` for stream functions, `fb_curve.csv`,
//! `field3d.csv`, and atomic JSON reports.
//!
//! Floats are written in shortest round-trip form so identical runs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{CrossSectionGrid, StreamField};
use crate::error::{Error, Result};
use crate::fb_analysis::FreeBoundaryCurve;
use crate::field::Point2;
use crate::reconstruct::HelicalVelocitySample;

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip decimal form of `v`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_owned()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("not a file path: {}", path.display())))?;
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Contents of `grid.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub schema_version: u32,
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// One string per grid row (bottom first), `1` for nodes in the mask.
    pub mask: Vec<String>,
    /// `(node index, value)` for every fixed boundary node.
    pub dirichlet: Vec<(usize, f64)>,
}

impl GridMetadata {
    pub fn from_grid(grid: &CrossSectionGrid) -> Self {
        let row = grid.nx() + 1;
        let mask = grid
            .mask()
            .chunks(row)
            .map(|r| r.iter().map(|&m| if m { '1' } else { '0' }).collect())
            .collect();
        let dirichlet = grid
            .dirichlet()
            .iter()
            .enumerate()
            .filter_map(|(n, d)| d.map(|v| (n, v)))
            .collect();
        let o = grid.origin();
        Self {
            schema_version: SCHEMA_VERSION,
            origin: [o.x, o.y],
            h: grid.h(),
            nx: grid.nx(),
            ny: grid.ny(),
            mask,
            dirichlet,
        }
    }

    pub fn to_grid(&self) -> Result<CrossSectionGrid> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Input(format!(
                "grid.json schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let row = self.nx + 1;
        if self.mask.len() != self.ny + 1 || self.mask.iter().any(|r| r.len() != row) {
            return Err(Error::Input("grid.json mask does not match nx, ny".into()));
        }
        let mut mask = Vec::with_capacity(row * (self.ny + 1));
        for r in &self.mask {
            for c in r.chars() {
                mask.push(match c {
                    '1' => true,
                    '0' => false,
                    _ => return Err(Error::Input(format!("grid.json mask has invalid character {c:?}"))),
                });
            }
        }
        let mut dirichlet = vec![None; mask.len()];
        for &(n, v) in &self.dirichlet {
            *dirichlet
                .get_mut(n)
                .ok_or_else(|| Error::Input(format!("grid.json fixed node {n} is out of range")))? = Some(v);
        }
        CrossSectionGrid::from_parts(Point2::new(self.origin[0], self.origin[1]), self.h, self.nx, self.ny, mask, dirichlet)
    }
}

/// `x,y,psi` for every mask node in index order.
pub fn psi_csv(psi: &StreamField) -> String {
    let grid = psi.grid();
    let mut s = String::from("x,y,psi\n");
    for n in 0..grid.node_count() {
        if !grid.in_mask(n) {
            continue;
        }
        let p = grid.node_position(n);
        let _ = writeln!(s, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(psi.values()[n]));
    }
    s
}

/// Writes `psi.csv` and `grid.json` into `dir`.
pub fn write_stream_field(dir: &Path, psi: &StreamField) -> Result<()> {
    write_atomic(&dir.join("psi.csv"), psi_csv(psi).as_bytes())?;
    write_json(&dir.join("grid.json"), &GridMetadata::from_grid(psi.grid()))
}

/// Loads a stream function written by [`write_stream_field`].
pub fn read_stream_field(psi_path: &Path, grid_path: &Path) -> Result<StreamField> {
    let meta: GridMetadata = read_json(grid_path)?;
    let grid = Arc::new(meta.to_grid()?);
    let mut values = vec![0.0; grid.node_count()];
    let mut seen = vec![false; grid.node_count()];
    let mut reader = csv::Reader::from_path(psi_path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "psi"] {
        return Err(Error::Input(format!("{}: expected header x,y,psi", psi_path.display())));
    }
    let h = grid.h();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Input(format!("{} line {}: bad number", psi_path.display(), line + 2)))
        };
        let p = Point2::new(field(0)?, field(1)?);
        let n = grid
            .nearest_node(p)
            .filter(|&n| (grid.node_position(n) - p).norm() <= 1e-6 * h && grid.in_mask(n))
            .ok_or_else(|| Error::Input(format!("{} line {}: point is not a mask node", psi_path.display(), line + 2)))?;
        values[n] = field(2)?;
        seen[n] = true;
    }
    if let Some(n) = (0..grid.node_count()).find(|&n| grid.in_mask(n) && !seen[n]) {
        let p = grid.node_position(n);
        return Err(Error::Input(format!(
            "{}: no value for mask node ({}, {})",
            psi_path.display(),
            p.x,
            p.y
        )));
    }
    StreamField::new(grid, values)
}

/// `x,y,residual,curve` for every vertex; the residual is empty where it was not evaluated.
pub fn fb_curve_csv(curves: &[FreeBoundaryCurve]) -> String {
    let mut s = String::from("x,y,residual,curve\n");
    for (c, curve) in curves.iter().enumerate() {
        for (k, p) in curve.vertices.iter().enumerate() {
            let r = curve.residuals.get(k).copied().flatten().map(fmt_f64).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", fmt_f64(p.x), fmt_f64(p.y), r, c);
        }
    }
    s
}

pub fn field3d_csv(samples: &[HelicalVelocitySample]) -> String {
    let mut s = String::from("x,y,z,u1,u2,u3\n");
    for q in samples {
        let (p, u) = (q.position, q.velocity);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.z),
            fmt_f64(u.x),
            fmt_f64(u.y),
            fmt_f64(u.z)
        );
    }
    s
}
