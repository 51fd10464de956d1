//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty stream")]
    EmptyStream,
    #[error("empty training data")]
    EmptyTrainingData,
    #[error("non-monotonic batch index: {pushed} after {newest}")]
    NonMonotonicBatch { pushed: usize, newest: usize },
    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: unknown label value {value:?}")]
    UnknownLabel { row: usize, value: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("concept family mismatch")]
    FamilyMismatch,
    #[error("invalid drift spec: {0}")]
    InvalidDriftSpec(String),
    #[error("learner not incremental-capable: {0}")]
    NotIncremental(String),
    #[error("invalid search budget: {0}")]
    InvalidBudget(String),
    #[error("budget exhausted before first evaluation")]
    BudgetBeforeFirstEval,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-increasing detector position: {pos} after {last}")]
    NonIncreasingPosition { pos: usize, last: usize },
    #[error("initial search failed: {0}")]
    InitialSearchFailed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("toml error: {0}")]
    Toml(String),
}

pub type Result<T> = std::result::Result<T, Error>;
