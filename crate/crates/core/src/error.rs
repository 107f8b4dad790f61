use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the recognition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("insufficient input: {0}")]
    InsufficientInput(String),

    #[error("layout estimation failed: {0}")]
    Estimation(String),

    #[error("cell {0}: centroid cannot be resolved without a reference cell")]
    UnresolvedCentroid(usize),

    #[error("cell {cell}: two dots map to position <{x},{y}>")]
    MalformedCell { cell: usize, x: u8, y: u8 },

    #[error("text overflows the page at character index {index}")]
    Pagination { index: usize },

    #[error("unsupported character {ch:?} at index {index}")]
    UnsupportedText { ch: char, index: usize },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
