use std::io;

use thiserror::Error;

use crate::jfif::JfifError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} channel(s), got {actual}")]
    InvalidChannels {
        expected: &'static str,
        actual: usize,
    },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },

    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("negative sample {0} cannot enter the log domain")]
    NegativeSample(f32),

    #[error("schedule degeneracy: gamma = 1 at step {0}")]
    ScheduleDegenerate(usize),

    #[error("decomposer error: {0}")]
    Decomposer(String),

    #[error("denoiser error: {0}")]
    Denoiser(String),

    #[error(transparent)]
    Jfif(#[from] JfifError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
