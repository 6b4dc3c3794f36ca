//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by simulation, calibration, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Tensor or series dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A numeric computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A file exists but its contents do not match the expected schema.
    #[error("schema error in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    /// Underlying filesystem failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn schema(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable process exit code for the CLI: distinct codes per failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam(_) => 3,
            Error::Io { .. } => 4,
            Error::Schema { .. } => 5,
            Error::ShapeMismatch(_) => 6,
            Error::Numeric(_) => 7,
        }
    }

    /// Short machine-parsable tag used in CLI error lines.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidParam(_) => "invalid-param",
            Error::Io { .. } => "io",
            Error::Schema { .. } => "schema",
            Error::ShapeMismatch(_) => "shape",
            Error::Numeric(_) => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
