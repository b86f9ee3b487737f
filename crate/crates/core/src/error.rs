use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the sensing and navigation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("point ({x:.4}, {y:.4}) m lies outside the {width:.4} x {height:.4} m grid")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("layer geometry mismatch: {0}")]
    Geometry(String),

    #[error("{path}:{line}:{column}: parse error: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: `{field}` {constraint}")]
    Validation { field: String, constraint: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error for {}: {message}", path.display())]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
