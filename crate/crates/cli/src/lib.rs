//! Configuration, pipelines and reports behind the `helifb` binary.

pub mod config;
pub mod ini;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
pub use pipeline::{run_analyze, run_exact, run_reconstruct, run_solve, run_validate, Inputs, Log, Status};

use helifb_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// Process exit code for a failed pipeline.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Input(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::Admissibility(_)
        | Error::ProfileViolation { .. } => EXIT_INPUT,
        Error::SolverDiverged { .. } => EXIT_NOT_CONVERGED,
        Error::OutOfDomain { .. } | Error::DegenerateNormal { .. } => EXIT_INTERNAL,
    }
}

pub fn status_code(s: Status) -> u8 {
    match s {
        Status::Ok => EXIT_OK,
        Status::NotConverged => EXIT_NOT_CONVERGED,
    }
}
