//! Crate-wide error type. Numerical failures (non-finite losses or gradients)
//! are distinct variants so callers can map them to a dedicated exit code.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what}: lengths differ ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("actual values have zero variance, r2 is undefined")]
    ZeroVariance,

    #[error("normal matrix is singular (collinear features)")]
    SingularSystem,

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("non-finite gradient entry at parameter index {index}")]
    NonFiniteGradient { index: usize },

    #[error("csv line {line}: {message}")]
    CsvFormat { line: usize, message: String },

    #[error("missing or malformed header, expected \"{expected}\"")]
    MissingHeader { expected: &'static str },

    #[error("split fingerprints differ: {left} vs {right}")]
    SplitMismatch { left: String, right: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for non-finite training failures; usage and data problems are not numerical.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
