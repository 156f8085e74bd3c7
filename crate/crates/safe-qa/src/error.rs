//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("unknown concept id {0}")]
    UnknownConcept(u32),

    #[error("path encoding failed: {0}")]
    Encode(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite {what}{}", offenders(.example_ids))]
    NonFinite {
        what: String,
        example_ids: Vec<String>,
    },

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("score join failed for example {id}: {msg}")]
    ScoreJoin { id: String, msg: String },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

fn offenders(ids: &[String]) -> String {
    if ids.is_empty() {
        String::new()
    } else {
        format!(" (examples: {})", ids.join(", "))
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
