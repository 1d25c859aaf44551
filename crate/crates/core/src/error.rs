use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the segmentation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: file not found")]
    FileNotFound { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV header: {0}")]
    MalformedWav(String),

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("empty frame")]
    EmptyFrame,

    #[error("frame of {len} samples is shorter than the maximum lag {max_lag}")]
    FrameTooShort { len: usize, max_lag: usize },

    #[error("audio shorter than one frame")]
    AudioTooShort,

    #[error("need at least {needed} feature rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("split at {split} leaves a side with fewer than {min_side} rows (window has {rows})")]
    InvalidSplit {
        split: usize,
        rows: usize,
        min_side: usize,
    },

    #[error("pitch track needs at least 2 frames, got {0}")]
    TrackTooShort(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid change-point list: {0}")]
    InvalidChangePoints(String),
}

/// Coarse error classes, shared by the CLI exit codes and the C ABI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Io,
    Format,
    Precondition,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Io => 2,
            ErrorClass::Format => 3,
            ErrorClass::Precondition => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::FileNotFound { .. } | Error::Io { .. } => ErrorClass::Io,
            Error::MalformedWav(_)
            | Error::UnsupportedEncoding(_)
            | Error::InvalidChangePoints(_)
            | Error::InvalidConfig(_)
            | Error::NonFinite => ErrorClass::Format,
            Error::EmptyFrame
            | Error::FrameTooShort { .. }
            | Error::AudioTooShort
            | Error::TooFewRows { .. }
            | Error::InvalidSplit { .. }
            | Error::TrackTooShort(_) => ErrorClass::Precondition,
        }
    }
}
