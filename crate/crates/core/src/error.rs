use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal of {len} samples is shorter than one window of {window} samples")]
    InsufficientLength { len: usize, window: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("biquad denominator has a pole on or outside the unit circle (r3={r3}, r4={r4})")]
    UnstableFilter { r3: f64, r4: f64 },

    #[error("no frame exceeds the VAD threshold")]
    NoActiveFrames,

    #[error("noise segment ({noise} samples from offset {offset}) is shorter than speech ({speech} samples)")]
    NoiseTooShort {
        noise: usize,
        speech: usize,
        offset: usize,
    },

    #[error("active speech level must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("reference signal is all zero")]
    ZeroReference,

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unsupported sample rate {found} Hz (expected {expected} Hz)")]
    UnsupportedSampleRate { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
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

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InsufficientLength { .. } => "InsufficientLength",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::UnstableFilter { .. } => "UnstableFilter",
            Error::NoActiveFrames => "NoActiveFrames",
            Error::NoiseTooShort { .. } => "NoiseTooShort",
            Error::NonPositiveSigma(_) => "NonPositiveSigma",
            Error::ZeroReference => "ZeroReference",
            Error::TrainingDiverged { .. } => "TrainingDiverged",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::UnsupportedSampleRate { .. } => "UnsupportedSampleRate",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Wav { .. } => "Wav",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
            Error::Toml(_) => "Toml",
        }
    }
}
