//! Error type shared across the library.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by dataset generation, transforms, fitting, and search.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two inputs that must agree in length or shape do not.
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An input value is NaN or infinite where a finite number is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// A data file failed to parse; the location points at the offending row/field.
    #[error("malformed file {path}: row {row}, field {field}: {message}")]
    MalformedFile {
        path: PathBuf,
        row: usize,
        field: usize,
        message: String,
    },

    /// Underlying I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The derivative-free search observed a non-finite objective value.
    #[error("objective returned a non-finite value ({value}) at candidate index {index}")]
    NonFiniteObjective { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
