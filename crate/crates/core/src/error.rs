//! Error type shared across the crate.

use crate::trace::TrainingTrace;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate group: group {group} has no samples")]
    DegenerateGroup { group: u8 },

    /// Training produced a non-finite parameter. The trace gathered up to the
    /// failing round is kept so callers can persist it for diagnosis.
    #[error("divergence: non-finite model parameters at round {round}")]
    Divergence {
        round: u64,
        partial_trace: Box<TrainingTrace>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Divergence { .. } => 4,
            _ => 1,
        }
    }
}
