//! Typed run configuration read from the INI format in [`crate::ini`].

use std::path::{Path, PathBuf};
use std::sync::Arc;

use helifb_core::coefficients::{default_validation_mesh, validate_profile, TabulatedProfile};
use helifb_core::discretization::{BoundaryData, BoundaryRegion};
use helifb_core::exact::{strip_solution, RadialSolution};
use helifb_core::fb_analysis::FlatnessOptions;
use helifb_core::reconstruct::ProbeOptions;
use helifb_core::{
    BernoulliConstant, CrossSectionGrid, DomainSpec, Error, FixedBoundarySpec, Method, Pitch, PlanarField, Point2,
    Result, SolverConfig, VorticityProfile,
};
use serde::Serialize;

use crate::ini::{Entry, Ini, Section};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainConfig {
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    Annulus {
        center: [f64; 2],
        r_inner: f64,
        r_outer: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl DomainConfig {
    pub fn to_spec(&self) -> DomainSpec {
        match self {
            Self::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            } => DomainSpec::Rectangle {
                x_min: *x_min,
                x_max: *x_max,
                y_min: *y_min,
                y_max: *y_max,
            },
            Self::Annulus {
                center,
                r_inner,
                r_outer,
            } => DomainSpec::Annulus {
                center: Point2::new(center[0], center[1]),
                r_inner: *r_inner,
                r_outer: *r_outer,
            },
            Self::Polygon { vertices } => DomainSpec::Polygon {
                vertices: vertices.iter().map(|v| Point2::new(v[0], v[1])).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Left,
    Right,
    Bottom,
    Top,
    InnerRing,
    OuterRing,
    All,
}

impl Region {
    const NAMES: [(&'static str, Region); 7] = [
        ("left", Region::Left),
        ("right", Region::Right),
        ("bottom", Region::Bottom),
        ("top", Region::Top),
        ("inner_ring", Region::InnerRing),
        ("outer_ring", Region::OuterRing),
        ("all", Region::All),
    ];

    fn core(self) -> BoundaryRegion {
        match self {
            Self::Left => BoundaryRegion::Left,
            Self::Right => BoundaryRegion::Right,
            Self::Bottom => BoundaryRegion::Bottom,
            Self::Top => BoundaryRegion::Top,
            Self::InnerRing => BoundaryRegion::InnerRing,
            Self::OuterRing => BoundaryRegion::OuterRing,
            Self::All => BoundaryRegion::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryValue {
    Constant(f64),
    /// Trace of the `[exact]` solution.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPiece {
    pub region: Region,
    pub value: BoundaryValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Zero,
    Sigmoid,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileConfig {
    pub name: ProfileName,
    /// Two-column `s,f` table, resolved against the config file's directory.
    pub table: Option<PathBuf>,
    pub f0: f64,
}

/// Closed-form fields for boundary data and the `exact` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactConfig {
    /// Radial helical solution with free boundary at `r = r0`.
    Radial { r0: f64 },
    /// `λ (h0 − y)⁺`.
    Strip { h0: f64 },
    Constant { value: f64 },
}

impl ExactConfig {
    pub fn field(self, pitch: Pitch, lambda: BernoulliConstant) -> impl Fn(Point2) -> f64 + Send + Sync + Copy {
        move |p| match self {
            Self::Radial { r0 } => RadialSolution::new(lambda, r0, pitch).value(p).unwrap_or(0.0).max(0.0),
            Self::Strip { h0 } => strip_solution(lambda.lambda(), h0).value(p).unwrap_or(0.0),
            Self::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    /// Extraction level; `h·λ/2` when unset.
    pub level: Option<f64>,
    /// Targets snapped to the nearest free boundary vertex.
    pub points: Vec<[f64; 2]>,
    /// Points placed along the longest curve when `points` is empty.
    pub auto_points: usize,
    pub r_max: f64,
    /// Smallest radius, in units of `h`.
    pub r_min_cells: f64,
    pub flatness: FlatnessOptions,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            level: None,
            points: Vec::new(),
            auto_points: 3,
            r_max: 0.2,
            r_min_cells: 4.0,
            flatness: FlatnessOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructConfig {
    pub probes: ProbeOptions,
    /// Probe threshold on `ψ`; the final regularisation width when unset.
    pub epsilon: Option<f64>,
    /// Spacing of the exported `field3d.csv` lattice, in units of `h`.
    pub sample_spacing: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            probes: ProbeOptions::default(),
            epsilon: None,
            sample_spacing: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub boundary: Vec<BoundaryPiece>,
    pub pitch: f64,
    pub lambda: f64,
    pub profile: ProfileConfig,
    pub h: f64,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub reconstruct: ReconstructConfig,
    pub exact: Option<ExactConfig>,
    /// Relative to the working directory, unlike `profile.table`.
    pub output: PathBuf,
}

/// The objects a run is built from.
pub struct Problem {
    pub grid: Arc<CrossSectionGrid>,
    pub pitch: Pitch,
    pub lambda: BernoulliConstant,
    pub profile: VorticityProfile,
}

struct Reader<'a> {
    file: &'a str,
    name: &'static str,
    section: Option<&'a Section>,
}

impl<'a> Reader<'a> {
    fn new(file: &'a str, ini: &'a Ini, name: &'static str, allowed: &[&str]) -> Result<Self> {
        let section = ini.section(name);
        if let Some(s) = section {
            if let Some(e) = s.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
                return Err(Error::Config(format!(
                    "{file}:{}: [{name}] unknown key `{}` (expected one of: {})",
                    e.line,
                    e.key,
                    allowed.join(", ")
                )));
            }
        }
        Ok(Self { file, name, section })
    }

    fn fail(&self, e: &Entry, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}:{}: [{}] {}: {msg}", self.file, e.line, self.name, e.key))
    }

    fn entry(&self, key: &str) -> Option<&'a Entry> {
        self.section.and_then(|s| s.get(key))
    }

    fn missing(&self, key: &str) -> Error {
        match self.section {
            Some(s) => Error::Config(format!(
                "{}:{}: [{}] missing required key `{key}`",
                self.file, s.line, self.name
            )),
            None => Error::Config(format!("{}: missing section [{}] (needs `{key}`)", self.file, self.name)),
        }
    }

    fn parse<T>(&self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|m| self.fail(e, m)),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.parse(key, parse_number)
    }

    fn require(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| self.missing(key))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.parse(key, |s| s.parse::<usize>().map_err(|_| format!("expected a non-negative integer, found {s:?}")))
    }

    fn check(&self, key: &str, ok: bool, msg: &str) -> Result<()> {
        match (ok, self.entry(key)) {
            (true, _) => Ok(()),
            (false, Some(e)) => Err(self.fail(e, msg)),
            (false, None) => Err(Error::Config(format!("{}: [{}] {key}: {msg}", self.file, self.name))),
        }
    }
}

/// A finite decimal, optionally written as a fraction `a/b`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("expected a number, found {s:?}");
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_number)
        .collect()
}

/// Points written as `x y, x y, ...`.
fn parse_points(s: &str) -> std::result::Result<Vec<[f64; 2]>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v = parse_list(t)?;
            match v[..] {
                [x, y] => Ok([x, y]),
                _ => Err(format!("expected `x y` pairs separated by commas, found {:?}", t.trim())),
            }
        })
        .collect()
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    match parse_list(s)?[..] {
        [x, y] => Ok([x, y]),
        _ => Err(format!("expected two numbers, found {s:?}")),
    }
}

const SECTIONS: [&str; 9] = [
    "domain",
    "boundary",
    "physics",
    "grid",
    "solver",
    "diagnostics",
    "reconstruct",
    "exact",
    "output",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, &path.display().to_string(), base)
    }

    /// Parses and validates; `file` labels messages and `base` anchors relative paths.
    pub fn parse(text: &str, file: &str, base: &Path) -> Result<Self> {
        let ini = Ini::parse(text).map_err(|e| Error::Config(format!("{file}:{}: {}", e.line, e.message)))?;
        if let Some(s) = ini.sections.iter().find(|s| !SECTIONS.contains(&s.name.as_str())) {
            return Err(Error::Config(format!("{file}:{}: unknown section [{}]", s.line, s.name)));
        }

        let d = Reader::new(
            file,
            &ini,
            "domain",
            &["kind", "x_min", "x_max", "y_min", "y_max", "center", "r_inner", "r_outer", "vertices"],
        )?;
        let kind = d.entry("kind").ok_or_else(|| d.missing("kind"))?;
        let domain = match kind.value.as_str() {
            "rectangle" => {
                let r = DomainConfig::Rectangle {
                    x_min: d.require("x_min")?,
                    x_max: d.require("x_max")?,
                    y_min: d.require("y_min")?,
                    y_max: d.require("y_max")?,
                };
                if let DomainConfig::Rectangle {
                    x_min,
                    x_max,
                    y_min,
                    y_max,
                } = r
                {
                    d.check("x_max", x_max > x_min, "x_max must exceed x_min")?;
                    d.check("y_max", y_max > y_min, "y_max must exceed y_min")?;
                }
                r
            }
            "annulus" => {
                let center = d.parse("center", parse_pair)?.unwrap_or([0.0, 0.0]);
                let r_inner = d.number("r_inner")?.unwrap_or(0.0);
                let r_outer = d.require("r_outer")?;
                d.check("r_inner", r_inner >= 0.0, "r_inner must be non-negative")?;
                d.check("r_outer", r_outer > r_inner, "r_outer must exceed r_inner")?;
                DomainConfig::Annulus {
                    center,
                    r_inner,
                    r_outer,
                }
            }
            "polygon" => {
                let vertices = d.parse("vertices", parse_points)?.ok_or_else(|| d.missing("vertices"))?;
                d.check("vertices", vertices.len() >= 3, "a polygon needs at least three vertices")?;
                DomainConfig::Polygon { vertices }
            }
            other => {
                return Err(d.fail(kind, format!("unknown domain kind {other:?} (rectangle, annulus, polygon)")));
            }
        };

        let names: Vec<&str> = Region::NAMES.iter().map(|(n, _)| *n).collect();
        let b = Reader::new(file, &ini, "boundary", &names)?;
        let mut boundary = Vec::new();
        let mut uses_exact = None;
        for e in b.section.map(|s| s.entries.as_slice()).unwrap_or_default() {
            let region = Region::NAMES.iter().find(|(n, _)| *n == e.key).map(|(_, r)| *r).unwrap();
            let value = if e.value == "exact" {
                uses_exact.get_or_insert(e);
                BoundaryValue::Exact
            } else {
                BoundaryValue::Constant(parse_number(&e.value).map_err(|m| b.fail(e, m))?)
            };
            if let BoundaryValue::Constant(v) = value {
                if v < 0.0 {
                    return Err(b.fail(e, "boundary data must be non-negative"));
                }
            }
            boundary.push(BoundaryPiece { region, value });
        }

        let p = Reader::new(file, &ini, "physics", &["pitch", "lambda", "profile", "profile_table", "f0"])?;
        let pitch = p.require("pitch")?;
        if let Err(Error::Config(m)) = Pitch::new(pitch) {
            return Err(p.fail(p.entry("pitch").unwrap(), m));
        }
        let lambda = p.require("lambda")?;
        if let Err(Error::Config(m)) = BernoulliConstant::new(lambda) {
            return Err(p.fail(p.entry("lambda").unwrap(), m));
        }
        let name = match p.entry("profile") {
            None => ProfileName::Zero,
            Some(e) => match e.value.as_str() {
                "zero" => ProfileName::Zero,
                "sigmoid" => ProfileName::Sigmoid,
                "tabulated" => ProfileName::Tabulated,
                other => return Err(p.fail(e, format!("unknown profile {other:?} (zero, sigmoid, tabulated)"))),
            },
        };
        let table = p.entry("profile_table").map(|e| base.join(&e.value));
        if name == ProfileName::Tabulated && table.is_none() {
            return Err(p.missing("profile_table"));
        }
        let f0 = p.number("f0")?.unwrap_or(1.0);
        p.check("f0", f0 > 0.0, "F0 must be positive")?;
        let profile = ProfileConfig { name, table, f0 };

        let g = Reader::new(file, &ini, "grid", &["h"])?;
        let h = g.require("h")?;
        g.check("h", h > 0.0, "grid spacing must be positive")?;

        let s = Reader::new(
            file,
            &ini,
            "solver",
            &[
                "method",
                "eps_start",
                "eps_factor",
                "eps_floor",
                "armijo",
                "backtrack",
                "max_backtracks",
                "tolerance",
                "max_iterations",
            ],
        )?;
        let mut solver = SolverConfig::default();
        if let Some(e) = s.entry("method") {
            solver.method = match e.value.as_str() {
                "newton" | "projected_newton" => Method::ProjectedNewton,
                "bb" | "barzilai_borwein" => Method::BarzilaiBorwein,
                other => return Err(s.fail(e, format!("unknown method {other:?} (newton, bb)"))),
            };
        }
        for (key, slot) in [
            ("eps_start", &mut solver.eps_start),
            ("eps_factor", &mut solver.eps_factor),
            ("eps_floor", &mut solver.eps_floor),
            ("armijo", &mut solver.armijo),
            ("backtrack", &mut solver.backtrack),
            ("tolerance", &mut solver.tolerance),
        ] {
            if let Some(v) = s.number(key)? {
                *slot = v;
            }
        }
        if let Some(v) = s.count("max_backtracks")? {
            solver.max_backtracks = v;
        }
        if let Some(v) = s.count("max_iterations")? {
            solver.max_iterations = v;
        }
        if let Err(Error::Config(m)) = solver.validate() {
            return Err(Error::Config(format!("{file}: [solver] {m}")));
        }

        let dg = Reader::new(
            file,
            &ini,
            "diagnostics",
            &[
                "level",
                "points",
                "auto_points",
                "r_max",
                "r_min_cells",
                "flatness_radial",
                "flatness_angular",
                "flatness_coarse",
                "flatness_restarts",
                "flatness_tolerance",
                "seed",
            ],
        )?;
        let mut diagnostics = DiagnosticsConfig::default();
        diagnostics.level = dg.number("level")?;
        if let Some(l) = diagnostics.level {
            dg.check("level", l >= 0.0, "extraction level must be non-negative")?;
        }
        diagnostics.points = dg.parse("points", parse_points)?.unwrap_or_default();
        diagnostics.auto_points = dg.count("auto_points")?.unwrap_or(diagnostics.auto_points);
        diagnostics.r_max = dg.number("r_max")?.unwrap_or(diagnostics.r_max);
        dg.check("r_max", diagnostics.r_max > 0.0, "r_max must be positive")?;
        diagnostics.r_min_cells = dg.number("r_min_cells")?.unwrap_or(diagnostics.r_min_cells);
        dg.check("r_min_cells", diagnostics.r_min_cells > 0.0, "r_min_cells must be positive")?;
        let fl = &mut diagnostics.flatness;
        for (key, slot) in [
            ("flatness_radial", &mut fl.radial),
            ("flatness_angular", &mut fl.angular),
            ("flatness_coarse", &mut fl.coarse),
            ("flatness_restarts", &mut fl.restarts),
        ] {
            if let Some(v) = dg.count(key)? {
                *slot = v;
            }
        }
        fl.tolerance = dg.number("flatness_tolerance")?.unwrap_or(fl.tolerance);
        fl.seed = dg.parse("seed", |s| s.parse::<u64>().map_err(|_| format!("expected an integer seed, found {s:?}")))?
            .unwrap_or(fl.seed);
        dg.check("flatness_radial", fl.radial > 0, "must be positive")?;
        dg.check("flatness_angular", fl.angular > 0, "must be positive")?;
        dg.check("flatness_coarse", fl.coarse > 0, "must be positive")?;
        dg.check("flatness_tolerance", fl.tolerance > 0.0, "must be positive")?;

        let rc = Reader::new(
            file,
            &ini,
            "reconstruct",
            &[
                "spacing",
                "z_levels",
                "step",
                "margin",
                "epsilon",
                "vorticity_floor",
                "spot_checks",
                "seed",
                "sample_spacing",
            ],
        )?;
        let mut reconstruct = ReconstructConfig::default();
        let pr = &mut reconstruct.probes;
        pr.spacing = rc.number("spacing")?.unwrap_or(pr.spacing);
        rc.check("spacing", pr.spacing > 0.0, "spacing must be positive")?;
        pr.z_levels = rc.parse("z_levels", parse_list)?.unwrap_or(pr.z_levels.clone());
        rc.check("z_levels", !pr.z_levels.is_empty(), "at least one z level is needed")?;
        pr.step = rc.number("step")?.unwrap_or(pr.step);
        rc.check("step", pr.step > 0.0, "step must be positive")?;
        pr.margin = rc.count("margin")?.unwrap_or(pr.margin);
        pr.vorticity_floor = rc.number("vorticity_floor")?.unwrap_or(pr.vorticity_floor);
        pr.spot_checks = rc.count("spot_checks")?.unwrap_or(pr.spot_checks);
        pr.seed = rc.parse("seed", |s| s.parse::<u64>().map_err(|_| format!("expected an integer seed, found {s:?}")))?
            .unwrap_or(pr.seed);
        reconstruct.epsilon = rc.number("epsilon")?;
        reconstruct.sample_spacing = rc.number("sample_spacing")?.unwrap_or(reconstruct.sample_spacing);
        rc.check("sample_spacing", reconstruct.sample_spacing > 0.0, "must be positive")?;

        let x = Reader::new(file, &ini, "exact", &["kind", "r0", "h0", "value"])?;
        let exact = match x.entry("kind") {
            None if x.section.is_some() => return Err(x.missing("kind")),
            None => None,
            Some(e) => Some(match e.value.as_str() {
                "radial" => {
                    let r0 = x.require("r0")?;
                    x.check("r0", r0 > 0.0, "r0 must be positive")?;
                    ExactConfig::Radial { r0 }
                }
                "strip" => ExactConfig::Strip { h0: x.require("h0")? },
                "constant" => {
                    let value = x.require("value")?;
                    x.check("value", value >= 0.0, "value must be non-negative")?;
                    ExactConfig::Constant { value }
                }
                other => return Err(x.fail(e, format!("unknown exact solution {other:?} (radial, strip, constant)"))),
            }),
        };
        if let (Some(e), None) = (uses_exact, exact) {
            return Err(b.fail(e, "`exact` boundary data needs an [exact] section"));
        }

        let o = Reader::new(file, &ini, "output", &["dir"])?;
        let output = o.entry("dir").map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));

        let config = Self {
            domain,
            boundary,
            pitch,
            lambda,
            profile,
            h,
            solver,
            diagnostics,
            reconstruct,
            exact,
            output,
        };
        let profile = config.vorticity_profile()?;
        validate_profile(&profile, &default_validation_mesh())
            .map_err(|e| Error::Config(format!("{file}: [physics] profile: {e}")))?;
        Ok(config)
    }

    pub fn pitch(&self) -> Pitch {
        Pitch::new(self.pitch).expect("validated on load")
    }

    pub fn lambda(&self) -> BernoulliConstant {
        BernoulliConstant::new(self.lambda).expect("validated on load")
    }

    pub fn vorticity_profile(&self) -> Result<VorticityProfile> {
        let p = match self.profile.name {
            ProfileName::Zero => VorticityProfile::zero(),
            ProfileName::Sigmoid => VorticityProfile::sigmoid(),
            ProfileName::Tabulated => {
                let path = self.profile.table.as_ref().expect("validated on load");
                VorticityProfile::tabulated(TabulatedProfile::from_csv(path)?, self.profile.f0)
            }
        };
        Ok(p.with_f0(self.profile.f0))
    }

    pub fn fixed_boundary(&self) -> FixedBoundarySpec {
        let exact = self.exact.map(|e| e.field(self.pitch(), self.lambda()));
        self.boundary.iter().fold(FixedBoundarySpec::new(), |acc, piece| {
            let data = match piece.value {
                BoundaryValue::Constant(v) => BoundaryData::Constant(v),
                BoundaryValue::Exact => BoundaryData::function(exact.expect("validated on load")),
            };
            acc.with(piece.region.core(), data)
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        let grid = CrossSectionGrid::build(&self.domain.to_spec(), self.h, &self.fixed_boundary())?;
        Ok(Problem {
            grid: Arc::new(grid),
            pitch: self.pitch(),
            lambda: self.lambda(),
            profile: self.vorticity_profile()?,
        })
    }
}
