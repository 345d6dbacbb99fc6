use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad error category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Model,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("row `{id}`: unknown label `{label}`")]
    UnknownLabel { id: String, label: String },

    #[error("row `{id}`: {reason}")]
    InvalidRow { id: String, reason: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("labels absent for ids: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("class names differ: expected {expected:?}, found {found:?}")]
    SchemeMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("invalid probability vector: {0}")]
    InvalidProbs(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("model error: {0}")]
    Model(#[source] Box<dyn std::error::Error + Send + Sync>),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Model(_) | Error::SchemeMismatch { .. } | Error::InvalidProbs(_) => {
                ErrorKind::Model
            }
            _ => ErrorKind::Data,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn model<E>(err: E) -> Self
    where
        E: Into<Box<dyn std::error::Error + Send + Sync>>,
    {
        Error::Model(err.into())
    }
}
