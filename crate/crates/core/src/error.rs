use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the hogkit pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("image {width}x{height} is smaller than one {cell_size}x{cell_size} cell")]
    EmptyGrid {
        width: usize,
        height: usize,
        cell_size: usize,
    },

    #[error("window ({x}, {y}, {w}x{h}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: i64,
        y: i64,
        w: i64,
        h: i64,
        width: usize,
        height: usize,
    },

    #[error("annotation {index}: {source}")]
    Annotation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("template has zero norm")]
    DegenerateTemplate,

    #[error("size mismatch: {0}")]
    Size(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn decode(offset: usize, message: impl Into<String>) -> Self {
        Error::Decode {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
