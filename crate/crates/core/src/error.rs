use std::fmt;
use std::io;
use std::path::PathBuf;

/// Errors shared by every module of the pipeline.
#[derive(Debug)]
pub enum Error {
    /// File-system level failure (missing file, unreadable path).
    Io { path: PathBuf, source: io::Error },
    /// Content that exists but cannot be decoded or violates a file schema.
    Format(String),
    /// Caller passed incompatible arguments (dimension mismatch etc.).
    Argument(String),
    /// Operation invoked in an invalid state (e.g. finalizing an empty model).
    State(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "{}: {}", path.display(), source),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::State(msg) => write!(f, "invalid state: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
