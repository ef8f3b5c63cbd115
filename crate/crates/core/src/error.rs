use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("insufficient frames in {source_id}: need {required} starting at frame {start}, found {available}")]
    InsufficientFrames {
        source_id: String,
        start: usize,
        required: usize,
        available: usize,
    },
    #[error("pyramid underflow: {width}x{height} cannot support {levels} levels at scale {scale}; use fewer pyramid levels")]
    PyramidUnderflow {
        width: usize,
        height: usize,
        levels: usize,
        scale: f64,
    },
    #[error("flo format error at byte {offset}: {message}")]
    FloFormat { offset: usize, message: String },
    #[error("flow for frame pair {index}: {source}")]
    FramePair {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("no clip could be processed ({failed} failed)")]
    NoClips { failed: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
