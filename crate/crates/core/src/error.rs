use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window length {len} exceeds the configured maximum {max}")]
    SizeLimit { len: usize, max: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("|s| = {0} is outside the open unit disc")]
    OutsideUnitDisc(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("data inconsistency: {0}")]
    DataInconsistency(String),

    #[error("rank-deficient system: rank {rank} of {columns} columns")]
    RankDeficient {
        rank: usize,
        columns: usize,
        singular_values: Vec<f64>,
    },

    #[error("ill-conditioned system: condition number {condition:.3e}")]
    Conditioning { condition: f64 },

    #[error("class not detected: {0}")]
    NotDetected(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
