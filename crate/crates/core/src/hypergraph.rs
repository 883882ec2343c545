//! Hypergraphs built from ordinary graphs and the normalized propagation
//! operator used by the convolution layers.
//!
//! Two constructions are provided:
//!
//! * **node-link**: one hyperedge per node, holding the node's neighbors
//!   (and, by default, the node itself);
//! * **degree**: one hyperedge per distinct degree value, holding every node
//!   with that degree. These hyperedges partition the node set.
//!
//! Hyperedge degree is `d(e) = Σ_v θ(v, e)` and node degree is
//! `d(v) = Σ_e θ(v, e) w(e)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{HgmnError, Result};
use crate::graph::Graph;
use crate::parallel;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypergraphKind {
    Link,
    Degree,
}

impl std::fmt::Display for HypergraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HypergraphKind::Link => "link",
            HypergraphKind::Degree => "degree",
        })
    }
}

impl std::str::FromStr for HypergraphKind {
    type Err = HgmnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "link" | "l" => Ok(HypergraphKind::Link),
            "degree" | "d" => Ok(HypergraphKind::Degree),
            other => Err(HgmnError::Config(format!("unknown hypergraph kind {other:?}"))),
        }
    }
}

/// Binary incidence structure with hyperedge weights and degree vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    kind: HypergraphKind,
    num_nodes: usize,
    /// Member lists, sorted; `members[e]` is column `e` of H.
    members: Vec<Vec<usize>>,
    incidence: CsrMatrix,
    edge_weights: Vec<f64>,
    node_degrees: Vec<f64>,
    edge_degrees: Vec<usize>,
}

impl Hypergraph {
    /// Builds from explicit hyperedges with unit weights. Every hyperedge
    /// must be non-empty; duplicate members are collapsed.
    pub fn from_hyperedges(num_nodes: usize, kind: HypergraphKind, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        let mut members = Vec::with_capacity(hyperedges.len());
        for (e, mut m) in hyperedges.into_iter().enumerate() {
            m.sort_unstable();
            m.dedup();
            if m.is_empty() {
                return Err(HgmnError::Config(format!("hyperedge {e} is empty")));
            }
            if let Some(&v) = m.last().filter(|&&v| v >= num_nodes) {
                return Err(HgmnError::NodeOutOfRange { id: v, n: num_nodes });
            }
            members.push(m);
        }
        let triplets: Vec<(usize, usize, f64)> = members
            .iter()
            .enumerate()
            .flat_map(|(e, m)| m.iter().map(move |&v| (v, e, 1.0)))
            .collect();
        let incidence = CsrMatrix::from_triplets(num_nodes, members.len(), &triplets)?;
        let edge_degrees = members.iter().map(Vec::len).collect();
        let mut h = Hypergraph {
            kind,
            num_nodes,
            members,
            incidence,
            edge_weights: Vec::new(),
            node_degrees: Vec::new(),
            edge_degrees,
        };
        h.set_weights(vec![1.0; h.members.len()]);
        Ok(h)
    }

    fn set_weights(&mut self, w: Vec<f64>) {
        let mut dv = vec![0.0; self.num_nodes];
        for (m, &we) in self.members.iter().zip(&w) {
            for &v in m {
                dv[v] += we;
            }
        }
        self.edge_weights = w;
        self.node_degrees = dv;
    }

    /// Replaces the hyperedge weights and recomputes node degrees.
    pub fn with_edge_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.num_edges() {
            return Err(HgmnError::shape(
                "hyperedge weights",
                format!("{} weights for {} hyperedges", weights.len(), self.num_edges()),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(HgmnError::Config(format!("invalid hyperedge weight {w}")));
        }
        self.set_weights(weights);
        Ok(self)
    }

    pub fn kind(&self) -> HypergraphKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.members.len()
    }

    /// Sparse N × N_E incidence matrix H.
    pub fn incidence(&self) -> &CsrMatrix {
        &self.incidence
    }

    pub fn members(&self, e: usize) -> &[usize] {
        &self.members[e]
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    pub fn node_degrees(&self) -> &[f64] {
        &self.node_degrees
    }

    pub fn edge_degrees(&self) -> &[usize] {
        &self.edge_degrees
    }

    /// Dense incidence, for small graphs and tests.
    pub fn incidence_dense(&self) -> Array2<f64> {
        self.incidence.to_dense()
    }

    /// Coordinate-format export: one `node_id edge_id weight` line per
    /// nonzero of H, ordered by hyperedge then node.
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        for (e, m) in self.members.iter().enumerate() {
            for &v in m {
                let _ = writeln!(s, "{v} {e} {}", self.edge_weights[e]);
            }
        }
        s
    }

    pub fn header(&self) -> IncidenceHeader {
        IncidenceHeader {
            kind: self.kind,
            num_nodes: self.num_nodes,
            num_edges: self.num_edges(),
            nnz: self.incidence.nnz(),
        }
    }

    /// Histogram of hyperedge sizes, `size -> count`.
    pub fn edge_size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &d in &self.edge_degrees {
            *h.entry(d).or_insert(0) += 1;
        }
        h
    }
}

/// JSON header written alongside the coordinate export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceHeader {
    pub kind: HypergraphKind,
    #[serde(rename = "N")]
    pub num_nodes: usize,
    #[serde(rename = "N_E")]
    pub num_edges: usize,
    pub nnz: usize,
}

/// Options for the node-link construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOptions {
    /// Put the central node in its own hyperedge.
    pub include_center: bool,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions { include_center: true }
    }
}

/// Node-link hypergraph: hyperedge `e_v` is the neighborhood of `v`.
///
/// An isolated node always gets the singleton hyperedge `{v}`, even with
/// `include_center` off, so no hyperedge is empty.
pub fn build_link_hypergraph(g: &Graph, opts: LinkOptions) -> Result<Hypergraph> {
    let hyperedges = (0..g.num_nodes())
        .map(|v| {
            let mut e = g.neighbors(v).to_vec();
            if opts.include_center || e.is_empty() {
                e.push(v);
            }
            e
        })
        .collect();
    Hypergraph::from_hyperedges(g.num_nodes(), HypergraphKind::Link, hyperedges)
}

/// Degree hypergraph: one hyperedge per distinct degree, in ascending
/// degree order. Isolated nodes form the degree-0 hyperedge.
pub fn build_degree_hypergraph(g: &Graph) -> Result<Hypergraph> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, d) in g.degrees().into_iter().enumerate() {
        groups.entry(d).or_default().push(v);
    }
    Hypergraph::from_hyperedges(g.num_nodes(), HypergraphKind::Degree, groups.into_values().collect())
}

pub fn build_hypergraph(g: &Graph, kind: HypergraphKind, opts: LinkOptions) -> Result<Hypergraph> {
    match kind {
        HypergraphKind::Link => build_link_hypergraph(g, opts),
        HypergraphKind::Degree => build_degree_hypergraph(g),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `D_v^{-1} H W D_e^{-1} H^T D_v^{-1}`.
    #[default]
    Inverse,
    /// `D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}`.
    InverseSqrt,
}

impl std::str::FromStr for Normalization {
    type Err = HgmnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse" | "asymmetric" => Ok(Normalization::Inverse),
            "symmetric" | "inverse_sqrt" | "sym" => Ok(Normalization::InverseSqrt),
            other => Err(HgmnError::Config(format!("unknown normalization {other:?}"))),
        }
    }
}

/// `P = L · H · diag(mid) · Hᵀ · R` with diagonal `L`, `R`, kept in factored
/// form. Applying it costs O(nnz(H) · F) regardless of how dense `P` is.
#[derive(Debug, Clone)]
pub struct PropagationOperator {
    source_kind: HypergraphKind,
    normalization: Normalization,
    incidence: CsrMatrix,
    incidence_t: CsrMatrix,
    left: Vec<f64>,
    mid: Vec<f64>,
    right: Vec<f64>,
}

pub fn propagation_operator(h: &Hypergraph, normalization: Normalization) -> Result<PropagationOperator> {
    if let Some(node) = h.node_degrees().iter().position(|&d| d <= 0.0) {
        return Err(HgmnError::ZeroNodeDegree { node });
    }
    let side: Vec<f64> = h
        .node_degrees()
        .iter()
        .map(|&d| match normalization {
            Normalization::Inverse => 1.0 / d,
            Normalization::InverseSqrt => 1.0 / d.sqrt(),
        })
        .collect();
    let mid = h
        .edge_weights()
        .iter()
        .zip(h.edge_degrees())
        .map(|(&w, &d)| w / d as f64)
        .collect();
    Ok(PropagationOperator {
        source_kind: h.kind(),
        normalization,
        incidence: h.incidence().clone(),
        incidence_t: h.incidence().transpose(),
        left: side.clone(),
        mid,
        right: side,
    })
}

impl PropagationOperator {
    pub fn num_nodes(&self) -> usize {
        self.left.len()
    }

    pub fn source_kind(&self) -> HypergraphKind {
        self.source_kind
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    fn chain(&self, x: ArrayView2<f64>, first: &[f64], last: &[f64]) -> Result<Array2<f64>> {
        if x.nrows() != self.num_nodes() {
            return Err(HgmnError::shape(
                "propagate",
                format!("operator is {n}x{n}, input has {} rows", x.nrows(), n = self.num_nodes()),
            ));
        }
        let mut y = x.to_owned();
        scale_rows(&mut y, first);
        let mut e = self.incidence_t.spmm(y.view())?;
        scale_rows(&mut e, &self.mid);
        let mut out = self.incidence.spmm(e.view())?;
        scale_rows(&mut out, last);
        Ok(out)
    }

    /// `P · x`.
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.chain(x, &self.right, &self.left)
    }

    /// `Pᵀ · x`.
    pub fn apply_transpose(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.chain(x, &self.left, &self.right)
    }

    /// Materializes `P` as a sparse N × N matrix.
    pub fn matrix(&self) -> CsrMatrix {
        let mut lh = self.incidence.clone();
        lh.scale_rows(&self.left);
        lh.scale_cols(&self.mid);
        let mut ht = self.incidence_t.clone();
        ht.scale_cols(&self.right);
        lh.matmul(&ht).expect("incidence shapes agree")
    }
}

fn scale_rows(m: &mut Array2<f64>, s: &[f64]) {
    let width = m.ncols();
    let data = m.as_slice_mut().expect("standard layout");
    parallel::for_each_row_mut(data, width, |r, row| {
        for x in row {
            *x *= s[r];
        }
    });
}
