//! The coefficient matrix of the reduced operator and vorticity profiles.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Point2;
use crate::helix::Pitch;

/// Symmetric 2×2 matrix `[[k11, k12], [k12, k22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffMatrix {
    pub k11: f64,
    pub k12: f64,
    pub k22: f64,
}

impl CoeffMatrix {
    pub const IDENTITY: Self = Self {
        k11: 1.0,
        k12: 0.0,
        k22: 1.0,
    };

    pub fn apply(&self, v: Point2) -> Point2 {
        Point2::new(
            self.k11 * v.x + self.k12 * v.y,
            self.k12 * v.x + self.k22 * v.y,
        )
    }

    /// `⟨M v, v⟩`
    pub fn quad(&self, v: Point2) -> f64 {
        self.k11 * v.x * v.x + 2.0 * self.k12 * v.x * v.y + self.k22 * v.y * v.y
    }

    pub fn det(&self) -> f64 {
        self.k11 * self.k22 - self.k12 * self.k12
    }

    /// Product of two symmetric matrices, returned as a full row-major 2×2.
    pub fn mul(&self, o: &Self) -> [[f64; 2]; 2] {
        [
            [
                self.k11 * o.k11 + self.k12 * o.k12,
                self.k11 * o.k12 + self.k12 * o.k22,
            ],
            [
                self.k12 * o.k11 + self.k22 * o.k12,
                self.k12 * o.k12 + self.k22 * o.k22,
            ],
        ]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.k11 + self.k22);
        let diff = 0.5 * (self.k11 - self.k22);
        let rad = diff.hypot(self.k12);
        (mean - rad, mean + rad)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        (self.k11 - o.k11)
            .abs()
            .max((self.k12 - o.k12).abs())
            .max((self.k22 - o.k22).abs())
    }

    pub fn frobenius_diff(&self, o: &Self) -> f64 {
        let a = self.k11 - o.k11;
        let b = self.k12 - o.k12;
        let c = self.k22 - o.k22;
        (a * a + 2.0 * b * b + c * c).sqrt()
    }

    /// `I + (mu − 1) e eᵀ` for the unit vector along `x`; identity when `x = 0`.
    fn radial_scaling(x: Point2, mu: f64) -> Self {
        let r2 = x.dot(x);
        if r2 == 0.0 {
            return Self::IDENTITY;
        }
        let s = (mu - 1.0) / r2;
        Self {
            k11: 1.0 + s * x.x * x.x,
            k12: s * x.x * x.y,
            k22: 1.0 + s * x.y * x.y,
        }
    }
}

/// `K(X) = (κ² + |X|²)⁻¹ [[κ² + y², −xy], [−xy, κ² + x²]]`.
pub fn coeff_matrix(x: Point2, pitch: Pitch) -> CoeffMatrix {
    let k2 = pitch.kappa() * pitch.kappa();
    let inv = 1.0 / (k2 + x.x * x.x + x.y * x.y);
    CoeffMatrix {
        k11: (k2 + x.y * x.y) * inv,
        k12: -x.x * x.y * inv,
        k22: (k2 + x.x * x.x) * inv,
    }
}

/// `K⁻¹(X) = κ⁻² [[κ² + x², xy], [xy, κ² + y²]]`.
pub fn coeff_inverse(x: Point2, pitch: Pitch) -> CoeffMatrix {
    let k2 = pitch.kappa() * pitch.kappa();
    CoeffMatrix {
        k11: (k2 + x.x * x.x) / k2,
        k12: x.x * x.y / k2,
        k22: (k2 + x.y * x.y) / k2,
    }
}

/// Radial eigenvalue `κ² / (κ² + |X|²)` of `K`; the tangential one is 1.
pub fn radial_eigenvalue(x: Point2, pitch: Pitch) -> f64 {
    let k2 = pitch.kappa() * pitch.kappa();
    k2 / (k2 + x.dot(x))
}

/// Positive square root `K^{1/2}(X)` and its inverse `K^{−1/2}(X)`.
///
/// Built from the eigendecomposition: the radial direction carries
/// `√(κ²/(κ²+|X|²))`, the tangential direction carries 1.
pub fn coeff_sqrt(x: Point2, pitch: Pitch) -> (CoeffMatrix, CoeffMatrix) {
    let mu = radial_eigenvalue(x, pitch).sqrt();
    (
        CoeffMatrix::radial_scaling(x, mu),
        CoeffMatrix::radial_scaling(x, 1.0 / mu),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Eigenvalue bounds of `K` over the disc of radius `radius` about the axis.
pub fn ellipticity_bounds(radius: f64, pitch: Pitch) -> Result<EllipticityBounds> {
    if !(radius >= 0.0) {
        return Err(Error::Input("domain radius must be nonnegative".into()));
    }
    let k2 = pitch.kappa() * pitch.kappa();
    Ok(EllipticityBounds {
        lambda_min: k2 / (k2 + radius * radius),
        lambda_max: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliConstant(f64);

impl BernoulliConstant {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config("lambda must be positive".into()));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }
}

/// `(f(s), f'(s), F(s))` with `F(s) = ∫₀ˢ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub f: f64,
    pub df: f64,
    pub primitive: f64,
}

/// Monotone cubic (Fritsch-Carlson) interpolant of tabulated `f`, constant
/// beyond the table ends.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    s: Vec<f64>,
    f: Vec<f64>,
    slopes: Vec<f64>,
    /// Primitive from `s[0]` to each knot.
    cumulative: Vec<f64>,
    /// Primitive from `s[0]` to 0, subtracted so that `F(0) = 0`.
    offset: f64,
}

impl TabulatedProfile {
    pub fn new(s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if s.len() != f.len() || s.len() < 2 {
            return Err(Error::Input(
                "tabulated profile needs at least two (s, f) pairs".into(),
            ));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input(
                "tabulated profile abscissae must be strictly increasing".into(),
            ));
        }
        if s.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("tabulated profile has non-finite entries".into()));
        }
        let n = s.len();
        let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|k| (f[k + 1] - f[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = d[0];
        slopes[n - 1] = d[n - 2];
        for k in 1..n - 1 {
            if d[k - 1] * d[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
            }
        }
        let mut table = Self {
            s,
            f,
            slopes,
            cumulative: vec![0.0; n],
            offset: 0.0,
        };
        for k in 0..n - 1 {
            let seg = table.segment_primitive(k, 1.0);
            table.cumulative[k + 1] = table.cumulative[k] + seg;
        }
        table.offset = table.primitive_from_start(0.0);
        Ok(table)
    }

    /// Reads a two-column `s, f` CSV; a non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut s = Vec::new();
        let mut f = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Input(format!(
                    "{}: row {} must have exactly two columns",
                    path.display(),
                    row + 1
                )));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    s.push(a);
                    f.push(b);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Input(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        row + 1
                    )))
                }
            }
        }
        Self::new(s, f)
    }

    fn segment_primitive(&self, k: usize, t: f64) -> f64 {
        let h = self.s[k + 1] - self.s[k];
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        let i00 = 0.5 * t4 - t3 + t;
        let i10 = 0.25 * t4 - 2.0 / 3.0 * t3 + 0.5 * t2;
        let i01 = -0.5 * t4 + t3;
        let i11 = 0.25 * t4 - t3 / 3.0;
        h * (i00 * self.f[k]
            + i10 * h * self.slopes[k]
            + i01 * self.f[k + 1]
            + i11 * h * self.slopes[k + 1])
    }

    fn primitive_from_start(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            return (s - self.s[0]) * self.f[0];
        }
        if s >= self.s[n - 1] {
            return self.cumulative[n - 1] + (s - self.s[n - 1]) * self.f[n - 1];
        }
        let k = self.segment(s);
        let t = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.cumulative[k] + self.segment_primitive(k, t)
    }

    fn segment(&self, s: f64) -> usize {
        let idx = self.s.partition_point(|&v| v <= s);
        idx.saturating_sub(1).min(self.s.len() - 2)
    }

    pub fn eval(&self, s: f64) -> ProfileSample {
        let n = self.s.len();
        let primitive = self.primitive_from_start(s) - self.offset;
        if s <= self.s[0] {
            return ProfileSample {
                f: self.f[0],
                df: 0.0,
                primitive,
            };
        }
        if s >= self.s[n - 1] {
            return ProfileSample {
                f: self.f[n - 1],
                df: 0.0,
                primitive,
            };
        }
        let k = self.segment(s);
        let h = self.s[k + 1] - self.s[k];
        let t = (s - self.s[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let f = (2.0 * t3 - 3.0 * t2 + 1.0) * self.f[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.f[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1];
        let df = ((6.0 * t2 - 6.0 * t) * self.f[k]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * self.slopes[k]
            + (-6.0 * t2 + 6.0 * t) * self.f[k + 1]
            + (3.0 * t2 - 2.0 * t) * h * self.slopes[k + 1])
            / h;
        ProfileSample { f, df, primitive }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `f ≡ 0`: the pure Alt-Caffarelli case.
    Zero,
    /// `f(s) = 1/(1 + e^{4s}) − 1/2`.
    Sigmoid,
    Tabulated(TabulatedProfile),
}

/// Vorticity profile `f` together with its admissibility bound `F0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VorticityProfile {
    pub kind: ProfileKind,
    pub f0: f64,
}

impl VorticityProfile {
    pub fn zero() -> Self {
        Self {
            kind: ProfileKind::Zero,
            f0: 1.0,
        }
    }

    pub fn sigmoid() -> Self {
        Self {
            kind: ProfileKind::Sigmoid,
            f0: 1.0,
        }
    }

    pub fn tabulated(table: TabulatedProfile, f0: f64) -> Self {
        Self {
            kind: ProfileKind::Tabulated(table),
            f0,
        }
    }

    pub fn with_f0(mut self, f0: f64) -> Self {
        self.f0 = f0;
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ProfileKind::Zero)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProfileKind::Zero => "zero",
            ProfileKind::Sigmoid => "sigmoid",
            ProfileKind::Tabulated(_) => "tabulated",
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> ProfileSample {
        match &self.kind {
            ProfileKind::Zero => ProfileSample {
                f: 0.0,
                df: 0.0,
                primitive: 0.0,
            },
            ProfileKind::Sigmoid => sigmoid(s),
            ProfileKind::Tabulated(t) => t.eval(s),
        }
    }
}

/// Overflow-safe sigmoid profile: `f = −tanh(2s)/2`, `f' = −sech²(2s)`,
/// `F = s/2 − ¼ ln((1 + e^{4s})/2)`.
fn sigmoid(s: f64) -> ProfileSample {
    let t = (2.0 * s).tanh();
    let x = 4.0 * s;
    // ln(1 + e^x) without overflow
    let softplus = if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    };
    ProfileSample {
        f: -0.5 * t,
        df: -(1.0 - t * t),
        primitive: 0.5 * s - 0.25 * (softplus - std::f64::consts::LN_2),
    }
}

pub fn profile_eval(profile: &VorticityProfile, s: f64) -> ProfileSample {
    profile.eval(s)
}

/// Uniform validation mesh on `[-10, 10]`.
pub fn default_validation_mesh() -> Vec<f64> {
    (0..=4000).map(|i| -10.0 + 0.005 * i as f64).collect()
}

/// Checks `0 ≤ f ≤ F0` for `s ≤ 0` and `−F0 ≤ f' ≤ 0` everywhere on the mesh.
pub fn validate_profile(profile: &VorticityProfile, mesh: &[f64]) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::Input("validation mesh is empty".into()));
    }
    if !(profile.f0 > 0.0) {
        return Err(Error::Config("profile bound F0 must be positive".into()));
    }
    let f0 = profile.f0;
    for &s in mesh {
        let v = profile.eval(s);
        if s <= 0.0 {
            if v.f < 0.0 {
                return Err(Error::ProfileViolation { s, quantity: "f", value: v.f });
            }
            if v.f > f0 {
                return Err(Error::ProfileViolation { s, quantity: "f", value: v.f });
            }
        }
        if v.df > 0.0 || v.df < -f0 {
            return Err(Error::ProfileViolation { s, quantity: "f'", value: v.df });
        }
    }
    Ok(())
}
