use std::path::PathBuf;

/// Errors produced anywhere in the contact detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("signal too short: {len} samples, frame needs {frame_len}")]
    SignalTooShort { len: usize, frame_len: usize },

    #[error("expected {expected} channels, got {actual}")]
    ChannelCount { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("interpolation source is empty")]
    EmptySource,

    #[error("source timestamps must be strictly increasing (index {index})")]
    NonIncreasing { index: usize },

    #[error("empty frame")]
    EmptyFrame,

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("training data has a single class")]
    SingleClass,

    #[error("class {class} has {count} rows, fewer than k = {k}")]
    TooFewRows { class: &'static str, count: usize, k: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
