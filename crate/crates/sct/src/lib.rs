//! Standard-library companion to `sct-core`: container and weight file
//! formats, CSV metrics, PGM plots, the evaluation pipeline and the CLI.

pub mod config;
pub mod container;
pub mod pipeline;
pub mod report;
pub mod weights;

use std::path::PathBuf;

/// Errors from file formats and the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic or kind")]
    BadMagic { path: PathBuf },
    #[error("{path}: malformed header: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },
    #[error("{path}: payload truncated (expected {expected} values, got {got})")]
    TruncatedPayload { path: PathBuf, expected: usize, got: usize },
    #[error("{path}: dimension mismatch: {detail}")]
    DimensionMismatch { path: PathBuf, detail: String },
    #[error("{path}: layer {layer} does not match the target architecture ({detail})")]
    TopologyMismatch { path: PathBuf, layer: usize, detail: String },
    #[error(transparent)]
    Core(#[from] sct_core::Error),
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
