use thiserror::Error;

/// Errors raised by record validation and the metric engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("confidences/weights do not form a distribution: {0}")]
    Distribution(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("negative variance {variance} for ensemble member {member}")]
    NegativeVariance { member: usize, variance: f64 },

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("reference token sequence is empty")]
    EmptyReference,

    #[error("need at least one in-domain and one shifted sample")]
    SingleClass,

    #[error("covariance is not symmetric positive-definite: {0}")]
    Covariance(String),

    #[error("aggregation over an empty input")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid sample {id}: {reason}")]
    InvalidSample { id: String, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
