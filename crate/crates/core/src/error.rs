use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("duplicate city `{0}`")]
    DuplicateCity(String),

    #[error("unknown city `{0}`")]
    UnknownCity(String),

    #[error("unknown validator {0}")]
    UnknownValidator(u32),

    #[error("ping dataset contains no usable samples")]
    EmptyDataset,

    #[error("only {0} cities survive pruning; need at least 2")]
    InsufficientCoverage(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("contract call rejected: {0}")]
    Rejected(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
