use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: row {row}, column {column}: {message}")]
    Manifest {
        path: PathBuf,
        row: u64,
        column: String,
        message: String,
    },
    #[error("duplicate utterance id `{0}`")]
    DuplicateUtterance(String),
    #[error("utterance `{utterance_id}`: wav file {path} does not exist")]
    MissingWav { utterance_id: String, path: PathBuf },
    #[error("utterance `{utterance_id}`: feature file {path} does not exist")]
    MissingFeature { utterance_id: String, path: PathBuf },
    #[error("unknown utterance id `{0}`")]
    UnknownUtterance(String),
    #[error("wav {path}: {message}")]
    Wav { path: PathBuf, message: String },
    #[error("feature file: {0}")]
    Format(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("corpus `{name}`: {source}")]
    Corpus {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_corpus(name: impl Into<String>, source: Error) -> Self {
        Error::Corpus {
            name: name.into(),
            source: Box::new(source),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Manifest { .. } => "manifest",
            Error::DuplicateUtterance(_) => "duplicate-utterance",
            Error::MissingWav { .. } => "missing-wav",
            Error::MissingFeature { .. } => "missing-feature",
            Error::UnknownUtterance(_) => "unknown-utterance",
            Error::Wav { .. } => "wav",
            Error::Format(_) => "format",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidInput(_) => "invalid-input",
            Error::Degenerate(_) => "degenerate",
            Error::Numerical(_) => "numerical",
            Error::Corpus { source, .. } => source.kind(),
        }
    }
}
