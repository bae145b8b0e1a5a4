use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition (repeated node, empty operand, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A graph that must be acyclic contains a directed cycle.
    #[error("graph contains a directed cycle")]
    Cyclic,

    /// Sample data that cannot support the requested statistic.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Incompatible settings, e.g. a CI test applied to columns of the wrong type.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed text input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
