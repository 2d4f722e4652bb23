//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gradient norm {norm:.3e} below tolerance {tol:.3e}; point is near-critical")]
    NearCritical { norm: f64, tol: f64 },

    #[error("no sample point within the kernel window of the query")]
    IsolatedQuery,

    #[error("evaluation grid is empty")]
    EmptyGrid,

    #[error("no grid point attains density level {level:.6e}")]
    LevelTooHigh { level: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("non-finite value encountered during {context}")]
    NonFinite { context: &'static str },

    #[error("step undefined: {0}")]
    StepUndefined(String),

    #[error("inner solver failed: {0}")]
    SolverFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
