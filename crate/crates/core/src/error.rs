use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    MalformedRow { path: PathBuf, line: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("annotation error: {0}")]
    Annotation(String),

    #[error("no regex patterns for victim type `{0}`")]
    UnsupportedType(String),

    #[error("calibrator fitting failed: {0}")]
    Fitting(String),

    #[error("prediction kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("length mismatch: {left} predictions vs {right} gold values")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "prediction ids do not match gold ids: {} without prediction, {} without gold",
        without_prediction.len(),
        without_gold.len()
    )]
    IdMismatch {
        without_prediction: Vec<String>,
        without_gold: Vec<String>,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the content
    /// or shape of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
