use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("consistency error at node {node}: {what}")]
    Consistency { node: usize, what: String },

    #[error("{solver} did not converge after {iters} iterations (residual {residual:.3e})")]
    SolverDiverged {
        solver: &'static str,
        iters: usize,
        residual: f64,
    },

    #[error("scheme violation at node {node}: {what} (value {value:.6e})")]
    SchemeViolation {
        node: usize,
        what: &'static str,
        value: f64,
    },

    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("{stage} step failed at step {step}: {reason}; try reducing dt")]
    StepFailure {
        stage: &'static str,
        step: usize,
        reason: String,
    },

    #[error("non-finite value in {field} at step {step}")]
    NonFinite { field: &'static str, step: usize },

    #[error("mass operator is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("invalid parameter `{key}`: expected {expected}, got {got}")]
    Param {
        key: String,
        expected: String,
        got: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GridMismatch(_) => "grid-mismatch",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::Domain { .. } => "domain",
            Error::Consistency { .. } => "consistency",
            Error::SolverDiverged { .. } => "solver-diverged",
            Error::SchemeViolation { .. } => "scheme-violation",
            Error::Cfl { .. } => "cfl",
            Error::StepFailure { .. } => "step-failure",
            Error::NonFinite { .. } => "non-finite",
            Error::NotPositiveDefinite(_) => "not-positive-definite",
            Error::Eigen(_) => "eigen",
            Error::Diagnostic(_) => "diagnostic",
            Error::Param { .. } => "param",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Step index for failures raised inside the time loop.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::StepFailure { step, .. } | Error::NonFinite { step, .. } => Some(*step),
            _ => None,
        }
    }

    pub(crate) fn param(key: impl Into<String>, expected: impl Into<String>, got: impl ToString) -> Self {
        Error::Param {
            key: key.into(),
            expected: expected.into(),
            got: got.to_string(),
        }
    }
}
