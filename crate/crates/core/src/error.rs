use chrono::{DateTime, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty series: {0}")]
    EmptySeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("multiplicative model undefined: {0}")]
    Multiplicative(String),

    #[error("non-finite model state at {at}")]
    NonFinite { at: DateTime<Utc> },

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("duplicate record: {0}")]
    Duplicate(String),

    #[error("store: {0}")]
    Store(String),

    #[error("config: {0}")]
    Config(String),

    #[error("truth range mismatch: {0}")]
    RangeMismatch(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
