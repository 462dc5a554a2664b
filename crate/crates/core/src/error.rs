use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KwsError>;

#[derive(Error, Debug)]
pub enum KwsError {
    #[error("malformed audio: {0}")]
    Format(String),
    #[error("unsupported audio: {0}")]
    Unsupported(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate mix: {0}")]
    DegenerateMix(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("incomplete class artifacts: missing class {0}")]
    IncompleteArtifacts(crate::Class),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("rehearsal buffer is empty; refusing to retrain")]
    EmptyRehearsal,
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl KwsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KwsError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<hound::Error> for KwsError {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::Unsupported => KwsError::Unsupported("codec not supported".into()),
            hound::Error::IoError(io) => KwsError::Format(io.to_string()),
            other => KwsError::Format(other.to_string()),
        }
    }
}
