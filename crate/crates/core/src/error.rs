use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes or parameters handed to an operation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A transmitted signal exceeded the channel power constraint.
    #[error("power constraint violated: energy {energy} exceeds budget {budget}")]
    PowerConstraint { energy: f64, budget: f64 },

    /// Two sequences that must have equal length do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A numerical routine failed to converge or bracket its root.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed input file; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
