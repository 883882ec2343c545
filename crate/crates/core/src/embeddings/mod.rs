//! Per-node input features: structural role embeddings from heat-kernel
//! wavelets, proximity embeddings from biased random walks, and a plain
//! text format for exchanging precomputed embeddings.

mod io;
mod walks;
mod wavelet;

pub use io::{load_embeddings, parse_embeddings, save_embeddings};
pub use walks::{
    adjacency_embeddings, adjacency_embeddings_report, generate_walks, AdjacencyReport, WalkConfig,
};
pub use wavelet::{auto_scale, chebyshev_coefficients, heat_kernel_exact, role_embeddings, WaveletConfig};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HgmnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Role,
    Adjacency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Generated,
    Loaded,
}

/// Dense N × F feature matrix with every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    matrix: Array2<f64>,
    kind: EmbeddingKind,
    provenance: Provenance,
}

impl EmbeddingSet {
    pub fn new(matrix: Array2<f64>, kind: EmbeddingKind, provenance: Provenance) -> Result<Self> {
        if let Some(pos) = matrix.iter().position(|x| !x.is_finite()) {
            let (r, c) = (pos / matrix.ncols().max(1), pos % matrix.ncols().max(1));
            return Err(HgmnError::NonFinite(format!("{kind:?} embedding entry ({r}, {c})")));
        }
        Ok(EmbeddingSet {
            matrix,
            kind,
            provenance,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Checks the row count against a graph's node count.
    pub fn check_rows(&self, n: usize) -> Result<()> {
        if self.num_nodes() != n {
            return Err(HgmnError::RowCount {
                expected: n,
                actual: self.num_nodes(),
            });
        }
        Ok(())
    }
}
