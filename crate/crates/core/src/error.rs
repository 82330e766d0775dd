use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by assistants, sessions and the front ends built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown assistant `{0}`")]
    UnknownAssistant(String),

    #[error("missing binding for slot `{0}`")]
    MissingBinding(String),

    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("i/o failure: {0}")]
    Stream(#[from] io::Error),

    #[error("invalid constraint `{text}`: {reason}")]
    InvalidConstraint { text: String, reason: String },

    #[error("conflicting constraints: {0}")]
    ConflictingConstraints(String),

    #[error("constraints exclude every candidate: {0}")]
    Exhausted(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("choice index {index} out of range ({len} choices)")]
    ChoiceOutOfRange { index: usize, len: usize },

    #[error("stale choice: the recommendation changed since it was listed")]
    StaleChoice,

    #[error("session already accepted")]
    SessionAccepted,

    #[error("no recommendation has been computed yet")]
    NoRecommendation,

    #[error("protocol error: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn constraint(text: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConstraint {
            text: text.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by an unsatisfiable interaction set.
    pub fn is_conflict(&self) -> bool {
        matches!(self, Error::ConflictingConstraints(_) | Error::Exhausted(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
