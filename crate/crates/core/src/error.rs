use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("language model: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn unknown(kind: &'static str, id: impl ToString) -> Self {
        Error::UnknownId {
            kind,
            id: id.to_string(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
