//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by indexing, retrieval, selection, and the harness.
#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id: {0}")]
    DuplicateDocId(String),

    #[error("empty corpus: at least one document is required")]
    EmptyCorpus,

    #[error("unknown model id: {0}")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("topic mismatch: {left} vs {right}")]
    TopicMismatch { left: String, right: String },

    #[error("paired samples have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("expected {expected} measurements, got {actual}")]
    MeasurementCount { expected: usize, actual: usize },

    #[error("grid has no threads")]
    EmptyGrid,

    #[error("grid lookup failed: {0}")]
    GridLookup(String),

    #[error("{0}; regenerate the grid so the counterpart thread is present")]
    MissingCounterpart(String),

    #[error("no relevant documents in the training topics")]
    NoTrainingRelevance,

    #[error("a {0} timer is already running; nested timers are forbidden")]
    NestedTimer(String),

    #[error("{phase} phase failed (trial {trial}, fold {fold}): {source}")]
    Phase {
        phase: String,
        trial: usize,
        fold: String,
        #[source]
        source: Box<Error>,
    },
}
