use std::io;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A numeric argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An index (arm, round) was out of range.
    #[error("index error: {0}")]
    Index(String),

    /// A configuration referenced an unknown name or carried invalid values.
    #[error("config error: {0}")]
    Config(String),

    /// A policy was driven in an order its state machine does not allow.
    #[error("state error: {0}")]
    State(String),

    /// Inputs with incompatible shapes (e.g. traces with different horizons).
    #[error("shape error: {0}")]
    Shape(String),

    /// An audit could not produce a meaningful estimate.
    #[error("audit error: {0}")]
    Audit(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
