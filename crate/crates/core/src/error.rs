use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HgmnError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty graph: {0}")]
    EmptyGraph(String),

    #[error("node id {id} out of range (N = {n})")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("class {class} has no labeled nodes")]
    EmptyClass { class: usize },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("node {node} has zero degree in the hypergraph")]
    ZeroNodeDegree { node: usize },

    #[error("row count mismatch: expected {expected} rows, found {actual}")]
    RowCount { expected: usize, actual: usize },

    #[error(
        "Chebyshev approximation of order {order} does not reach tolerance {tolerance:e} \
         (tail estimate {estimate:e}); increase chebyshev_order"
    )]
    ChebyshevNotConverged {
        order: usize,
        tolerance: f64,
        estimate: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("backward called on an empty tape or an unknown variable")]
    NoForward,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("pickle decode: {0}")]
    Pickle(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HgmnError>;

impl HgmnError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HgmnError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        HgmnError::Shape {
            op,
            detail: detail.into(),
        }
    }
}
