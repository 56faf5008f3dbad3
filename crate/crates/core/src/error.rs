use thiserror::Error;

/// Errors raised across the preference-learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown trajectory id `{0}`")]
    UnknownTrajectory(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("no route from {from} to {to}")]
    NoRoute { from: u64, to: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("duplicate query ({0}, {1})")]
    DuplicateQuery(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
