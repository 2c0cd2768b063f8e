//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by any layer of the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor/parameter dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),

    /// A partitioner could not satisfy its constraints.
    #[error("partition error: {0}")]
    Partition(String),

    /// The benchmark does not support the requested operation.
    #[error("unsupported benchmark: {0}")]
    UnsupportedBenchmark(String),

    /// CSV ingestion failure, pinned to a cell.
    #[error("ingestion error at row {row}, column {col}: {msg}")]
    Ingestion { row: usize, col: String, msg: String },

    /// Message sent to a party with no handler for its type.
    #[error("dispatch error: {0}")]
    Dispatch(String),

    /// Task directory is missing, malformed, or inconsistent.
    #[error("task load error: {0}")]
    TaskLoad(String),

    /// Trace file rejected; `line` points at the offending construct.
    #[error("trace parse error at line {line}: {msg}")]
    Trace { line: usize, msg: String },

    /// Refusal to overwrite an existing non-empty output path.
    #[error("output path already exists and is not empty: {0}")]
    OutputExists(PathBuf),

    /// Training produced non-finite values.
    #[error("diverged: {0}")]
    Diverged(String),

    /// Record log entries must arrive in (round, virtual_time) order.
    #[error("record ordering error: {0}")]
    RecordOrder(String),

    /// No input records/files where at least one was required.
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
