use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("admissibility violated: {0}")]
    Admissibility(String),

    #[error("point ({x}, {y}) lies outside the field support")]
    OutOfDomain { x: f64, y: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("degenerate normal: |u x xi| = {magnitude:e} is below tolerance {tolerance:e}")]
    DegenerateNormal { magnitude: f64, tolerance: f64 },

    #[error("profile violates admissibility at s = {s}: {quantity} = {value}")]
    ProfileViolation {
        s: f64,
        quantity: &'static str,
        value: f64,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
