//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or preconditions violated by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed input data (CSV parse failures, ragged rows, ...).
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Structural problems in a table (duplicate headers, shape mismatch).
    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// No candidate column has a defined correlation with the target.
    #[error("no usable predictors for column '{0}'")]
    NoPredictors(String),

    /// Too few observed target rows to fit a model.
    #[error("insufficient training data for column '{0}': {1} rows")]
    InsufficientData(String, usize),

    /// Batch too short to compute correlations for the loss.
    #[error("degenerate batch: {0} rows")]
    DegenerateBatch(usize),

    /// A column with every cell masked cannot be imputed from itself.
    #[error("column '{0}' has no observed values")]
    FullyMissingColumn(String),
}

impl Error {
    /// Exit code contract: 1 for caller mistakes, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
