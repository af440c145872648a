use thiserror::Error;

/// Errors surfaced by the contract library and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{layer} encoding is {len} bytes, outside the [{min}, {max}] range")]
    EncodingOverflow {
        layer: &'static str,
        len: usize,
        min: usize,
        max: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("quorum needs at least one vote")]
    EmptyVoteVector,
    #[error("jain index is undefined for an all-zero allocation")]
    AllZeroAllocation,
    #[error("need at least {needed} seeds, got {got}")]
    InsufficientSeeds { needed: usize, got: usize },
    #[error("decision identity violated: {0}")]
    DecisionIdentity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
