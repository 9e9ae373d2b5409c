//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

/// Coarse classification used by callers that map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input, configuration or contract violation by the caller.
    Validation,
    /// Failure while executing an otherwise valid request.
    Runtime,
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("generation error for spec {spec}: {reason}")]
    Generation { spec: String, reason: String },

    #[error("ingestion error at byte {offset}: {reason}")]
    Ingest { offset: u64, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("file format error: {0}")]
    Format(String),

    #[error("degenerate clustering: fewer eligible neurons than clusters")]
    DegenerateClustering,

    #[error("undefined score: input lacks the structure the metric needs")]
    UndefinedScore,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CoreError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            CoreError::Validation(_)
            | CoreError::Generation { .. }
            | CoreError::Dimension { .. } => ErrorKind::Validation,
            CoreError::Ingest { .. }
            | CoreError::Format(_)
            | CoreError::DegenerateClustering
            | CoreError::UndefinedScore
            | CoreError::Io(_) => ErrorKind::Runtime,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CoreError::Validation(msg.into())
    }
}
