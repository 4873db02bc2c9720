use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the model, fitter and file layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigenvalue iteration did not converge for index {index}")]
    NoConvergence { index: usize },

    #[error("block {block}, trial {trial}: {reason}")]
    InvalidTrial {
        block: usize,
        trial: usize,
        reason: String,
    },

    #[error("session has no trials")]
    EmptySession,

    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::NoConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
