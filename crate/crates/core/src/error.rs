//! Crate-wide error type.

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across ingestion, kernels, sampling,
/// cost estimation, and report emission.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input (edge lists, numeric fields).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A vertex id outside `[0, num_vertices)`.
    #[error("vertex {vertex} out of range for graph with {limit} vertices")]
    Bounds { vertex: u64, limit: u64 },

    /// Dimension mismatch between graph, features, and model.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid or inconsistent configuration values.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A workload does not fit a stated memory capacity or size budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A kernel produced a non-finite value.
    #[error("non-finite value produced at layer {layer}")]
    Numeric { layer: usize },

    /// A binary artifact with a bad magic, version, or internal structure.
    #[error("unrecognized or corrupt file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
