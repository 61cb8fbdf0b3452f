use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments to a library call (length or dimension mismatch).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration value is missing or out of range. `path` is the dotted key.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An exhaustive computation was asked to enumerate more than the desk-scale limit.
    #[error("instance too large: {0}")]
    Size(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Size(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
            Error::Input(_) | Error::Internal(_) => 1,
        }
    }
}
