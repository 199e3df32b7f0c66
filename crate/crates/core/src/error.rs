use std::path::Path;

use thiserror::Error;

use crate::lm::Direction;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("token id {id} is outside the vocabulary (size {size})")]
    VocabularyMismatch { id: u32, size: usize },

    #[error("expected a {expected} model but got a {found} model")]
    Direction { expected: Direction, found: Direction },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("degenerate pair: a side is empty after filtering")]
    DegeneratePair,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
