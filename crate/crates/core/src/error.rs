use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain length {n}: {reason}")]
    Size { n: usize, reason: &'static str },

    #[error("invalid parity sector label {0} (expected 0 or 1)")]
    Sector(i64),

    #[error("non-finite coupling {name} = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grid is empty")]
    EmptyTimes,

    #[error("statistics window holds {found} samples, need at least {needed}")]
    TooFewSamples { found: usize, needed: usize },

    #[error("no revival detected before t = {horizon}")]
    NoRevival { horizon: f64 },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("invalid scan plan: {0}")]
    Plan(String),

    #[error("malformed dataset: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
