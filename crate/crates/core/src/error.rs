use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Validation failures (bad parameters, malformed inputs) are kept apart from
/// I/O failures so callers can map them to distinct exit statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("sample {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
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
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, detail: impl std::fmt::Display) -> Self {
        Error::Format {
            what,
            detail: detail.to_string(),
        }
    }

    /// True when the failure came from the filesystem rather than from the
    /// content or parameters supplied.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Sample { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
