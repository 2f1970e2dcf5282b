use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HrcfError>;

#[derive(Debug, Error)]
pub enum HrcfError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point violates the hyperboloid constraint: <x,x>_L = {inner}")]
    Constraint { inner: f64 },

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range for {what} (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("degenerate embeddings: mean squared norm is zero")]
    DegenerateEmbedding,

    #[error("training aborted at epoch {epoch}, batch {batch}: {detail}")]
    NumericAbort {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("oracle check failed: {0}")]
    OracleFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HrcfError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HrcfError::Config(_) => 1,
            HrcfError::Parse { .. } | HrcfError::EmptyDataset(_) | HrcfError::Io(_) => 2,
            HrcfError::Numeric(_)
            | HrcfError::NumericAbort { .. }
            | HrcfError::DegenerateEmbedding
            | HrcfError::Constraint { .. } => 3,
            HrcfError::OracleFailure(_) => 4,
            HrcfError::Dimension { .. } | HrcfError::Index { .. } => 1,
        }
    }
}
