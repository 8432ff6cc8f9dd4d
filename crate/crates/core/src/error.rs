use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed chain file: {0}")]
    Format(String),

    #[error("shape mismatch: header declares {declared} values but {actual} were found")]
    ShapeMismatch { declared: usize, actual: usize },

    #[error("non-finite entry {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("index {index} out of range (maximum {max})")]
    OutOfRange { index: usize, max: usize },

    #[error("symmetric eigensolver did not converge (max off-diagonal residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error(
        "no positive definite partial sum among indices 0..={max_index}; the chain is too short"
    )]
    NoPositiveDefinitePartialSum { max_index: usize },

    #[error("probability {0} outside (0, 1)")]
    Probability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
