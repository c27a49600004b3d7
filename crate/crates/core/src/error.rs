use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the channel, gap, loading and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("channel model has no paths")]
    EmptyPaths,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("channel response is all zero; cannot rescale")]
    ZeroResponse,

    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("no RS decoder input BER in range reaches target {target}")]
    NoRsSolution { target: f64 },

    #[error("exhaustive search space of {size} vectors exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },

    #[error("unsupported constellation size b = {0}")]
    UnsupportedConstellation(u32),

    #[error("subset plan does not match response: {0}")]
    PlanMismatch(String),

    #[error("unknown channel model `{0}`")]
    UnknownModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
