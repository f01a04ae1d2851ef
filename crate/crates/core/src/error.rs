use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("cannot read WAV {path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("unsupported WAV encoding (format tag 0x{format_tag:04x}, {bits} bits) in {path}")]
    UnsupportedWav {
        path: PathBuf,
        format_tag: u16,
        bits: u16,
    },

    #[error("upsampling refused: input rate {0} Hz is below 8000 Hz")]
    UpsamplingRefused(u32),

    #[error("no voiced frames")]
    NoVoicedFrames,

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("too few extrema")]
    TooFewExtrema,

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("untestable: {0}")]
    Untestable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("model file error: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
