use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no feasible direction: constraint frame already spans R^{0}")]
    Infeasible(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular sample covariance: {0}")]
    Singular(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error class. Zero is reserved for success
    /// and 2 for command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 3,
            Error::Io { .. } => 4,
            Error::Parse { .. } => 5,
            Error::DimensionMismatch { .. } => 6,
            Error::EmptySample | Error::Domain(_) => 7,
            Error::Infeasible(_) | Error::Singular(_) => 8,
            Error::Unsupported(_) => 9,
        }
    }
}
