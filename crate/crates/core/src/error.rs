use thiserror::Error;

use crate::model::ModelViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<ModelViolation>),

    #[error("matrix exponential overflow (1-norm {norm:e})")]
    ExpmOverflow { norm: f64 },

    #[error("propagator did not converge after {steps} steps (last max-norm delta {last_delta:e})")]
    NotConverged { steps: usize, last_delta: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("no steady state found (no trace-carrying eigenpair near 1)")]
    NoSteadyState,

    #[error("need at least two transient eigenpairs, found {0}")]
    TooFewTransients(usize),

    #[error("no Bloch reduction: {0}")]
    NoBlochReduction(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn format_violations(v: &[ModelViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
