//! Error type shared across the solver library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("resolution too small: need at least {min}, got {got}")]
    ResolutionTooSmall { min: usize, got: usize },

    #[error("projection not unique at {0:?}")]
    ProjectionNotUnique(Vec<f64>),

    #[error("{quantity} unavailable for this geometry: {reason}")]
    GeometryUnavailable { quantity: String, reason: String },

    #[error("density assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("lower bound unavailable: {0}")]
    LowerBoundUnavailable(String),

    #[error("upper bound unavailable: {0}")]
    UpperBoundUnavailable(String),

    #[error("invalid exponent p = {0}; need p >= 1")]
    InvalidExponent(f64),

    #[error("cannot normalise the zero field")]
    ZeroField,

    #[error("normalisation bracket not found after {0} doublings (non-coercive density or vanishing field)")]
    BracketNotFound(usize),

    #[error("solver failed: {0}")]
    SolverFailed(String),

    #[error("multiplier not positive (lambda_p must satisfy lambda_p > 0): theta = {0}")]
    NonPositiveMultiplier(f64),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config hash mismatch: checkpoint {checkpoint:#018x} vs current {current:#018x}")]
    ConfigHashMismatch { checkpoint: u64, current: u64 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("artifact is malformed: {0}")]
    MalformedArtifact(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
