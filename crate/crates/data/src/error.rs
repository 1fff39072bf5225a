use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path}: expected {expected}, found {found}")]
    WrongPixelFormat {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },

    #[error("{context}: id {id} at pixel ({x}, {y}) is invalid: {reason}")]
    InvalidPixel {
        context: String,
        id: u32,
        x: usize,
        y: usize,
        reason: String,
    },

    #[error("instance id {id}: {reason}")]
    InvalidInstanceId { id: u32, reason: String },

    #[error("registry: {0}")]
    Registry(String),

    #[error("maps have different extents: {0}x{1} vs {2}x{3}")]
    ExtentMismatch(usize, usize, usize, usize),

    #[error("empty map extent {0}x{1}")]
    EmptyMap(usize, usize),

    #[error("synthetic generation: {0}")]
    Synthesis(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("{0}")]
    Invalid(String),
}

impl DataError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, DataError>;
