use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image stream: {0}")]
    CorruptImage(String),
    #[error("cannot write {path}: {reason}")]
    Write { path: PathBuf, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected {expected} channel(s), got {got}")]
    ChannelCount { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("capacity exceeded: need {needed} carriers, image provides {available}")]
    CapacityExceeded { needed: usize, available: usize },
    #[error("message length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("codec failure: {0}")]
    Codec(String),
    #[error("plugin failed: {0}")]
    Plugin(String),
    #[error("plugin timed out after {0} s")]
    PluginTimeout(u64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
