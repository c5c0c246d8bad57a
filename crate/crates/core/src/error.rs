use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by graph operations, the neural kernel, the agent and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for a graph of {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("query budget exhausted: all {limit} queries used")]
    QueryBudgetExhausted { limit: u64 },

    #[error(
        "stale tape: recorded against parameter generation {recorded}, parameters are at {current}"
    )]
    StaleTape { recorded: u64, current: u64 },

    #[error("empty training batch")]
    EmptyBatch,

    #[error("replay buffer holds {len} transitions, {requested} requested")]
    BufferUnderfilled { len: usize, requested: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
