//! Node classification on hypergraphs built from ordinary graphs, with
//! role and adjacency embeddings fused by a small state-space block.

pub mod embeddings;
pub mod error;
pub mod eval;
pub mod graph;
pub mod hypergraph;
pub mod nn;
pub mod parallel;
pub mod planetoid;
pub mod sparse;
pub mod ssm;
pub mod trainer;

pub use error::{HgmnError, Result};
