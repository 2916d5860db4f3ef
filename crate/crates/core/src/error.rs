use std::path::PathBuf;

use thiserror::Error;

use crate::solvers::SparseCoefficients;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("node {node} is out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("graph is frozen and cannot be mutated")]
    GraphFrozen,

    /// The decision function needs at least one support vector to define its offset.
    #[error("coefficients for node {anchor} have an empty support")]
    EmptySupport { anchor: usize },

    #[error("active-set solver for node {anchor} did not converge after {iterations} iterations")]
    NonConvergence {
        anchor: usize,
        iterations: usize,
        best: Box<SparseCoefficients>,
    },

    #[error("linear program for pair ({i}, {j}) failed: {message}")]
    Lp { i: usize, j: usize, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
