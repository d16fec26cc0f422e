use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A malformed line in a persisted file. `line` is 1-based; 0 means the
    /// problem concerns the file as a whole.
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("unknown sample `{0}`")]
    UnknownSample(String),

    #[error("no in-vocabulary tokens in `{0}`")]
    NoCoverage(String),

    #[error("class `{0}` has no description")]
    MissingDescription(String),

    #[error("id sets differ; ids not shared by every table: {}", .0.join(", "))]
    IdSetMismatch(Vec<String>),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("McNemar's test is undefined without discordant pairs")]
    NoDiscordantPairs,
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub(crate) fn format(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of the underlying file system, as opposed to
    /// content or argument validation.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
