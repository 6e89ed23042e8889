use thiserror::Error;

/// Errors raised by the solver components.
#[derive(Debug, Error)]
pub enum EisError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported dynamics: {0}")]
    UnsupportedDynamics(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("training data is not representative: cell {cell} has {count} samples, need {required}")]
    NotRepresentative {
        cell: usize,
        count: usize,
        required: usize,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EisError> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> EisError {
    EisError::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(EisError::Shape { expected, actual })
    }
}
