use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class {0} has no components")]
    NoComponents(crate::cmm::Outcome),

    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("maps cover different segmentations ({left} vs {right} segments)")]
    SegmentationMismatch { left: usize, right: usize },

    #[error("length mismatch: {left} predictions for {right} ground-truth entries")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("unsupported {what} version {found}")]
    Version { what: &'static str, found: u32 },

    #[error("replay diverged from checkpoint {checkpoint}: expected {expected}, got {actual}")]
    ReplayMismatch {
        checkpoint: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
