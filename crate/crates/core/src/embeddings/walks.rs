//! Adjacency embeddings: p/q-biased second-order random walks followed by
//! skip-gram training with negative sampling.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingKind, EmbeddingSet, Provenance};
use crate::error::{HgmnError, Result};
use crate::graph::Graph;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_len: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_len: 80,
            walks_per_node: 10,
            window: 10,
            dim: 128,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl WalkConfig {
    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0) {
            return Err(HgmnError::Config(format!(
                "walk parameters must be positive (p = {}, q = {})",
                self.p, self.q
            )));
        }
        if self.dim == 0 || self.walk_len == 0 || self.window == 0 {
            return Err(HgmnError::Config("dim, walk_len and window must be >= 1".into()));
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, a, b)`.
fn stream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(splitmix(seed) ^ a) ^ b))
}

fn walk_from(g: &Graph, start: usize, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_len);
    walk.push(start);
    let uniform = cfg.p == 1.0 && cfg.q == 1.0;
    let mut weights = Vec::new();
    while walk.len() < cfg.walk_len {
        let cur = *walk.last().unwrap();
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = match walk.len() {
            1 => nbrs[rng.random_range(0..nbrs.len())],
            _ if uniform => nbrs[rng.random_range(0..nbrs.len())],
            _ => {
                let prev = walk[walk.len() - 2];
                weights.clear();
                let mut total = 0.0;
                for &x in nbrs {
                    let w = if x == prev {
                        1.0 / cfg.p
                    } else if g.has_edge(prev, x) {
                        1.0
                    } else {
                        1.0 / cfg.q
                    };
                    total += w;
                    weights.push(total);
                }
                let r = rng.random::<f64>() * total;
                let k = weights.partition_point(|&c| c <= r).min(nbrs.len() - 1);
                nbrs[k]
            }
        };
        walk.push(next);
    }
    walk
}

/// Walks for every node and round. Round `r` visits nodes in a seeded
/// shuffled order; each walk draws from its own `(seed, node, round)` stream.
pub fn generate_walks(g: &Graph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    let n = g.num_nodes();
    let mut starts = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let mut order: Vec<usize> = (0..n).filter(|&v| !g.neighbors(v).is_empty()).collect();
        order.shuffle(&mut stream(cfg.seed, u64::MAX, round as u64));
        starts.extend(order.into_iter().map(|v| (v, round)));
    }
    Ok(parallel::map_range(starts.len(), |i| {
        let (v, round) = starts[i];
        let mut rng = stream(cfg.seed, v as u64, round as u64);
        walk_from(g, v, cfg, &mut rng)
    }))
}

/// Outcome of adjacency embedding beyond the matrix itself.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyReport {
    pub embeddings: EmbeddingSet,
    /// Nodes without neighbors; their rows keep the random initialization.
    pub isolated_nodes: usize,
    pub num_walks: usize,
}

pub fn adjacency_embeddings(g: &Graph, cfg: &WalkConfig) -> Result<EmbeddingSet> {
    let report = adjacency_embeddings_report(g, cfg)?;
    if report.isolated_nodes > 0 {
        log::warn!(
            "{} isolated node(s) produced no walks; their adjacency rows are initialization only",
            report.isolated_nodes
        );
    }
    Ok(report.embeddings)
}

pub fn adjacency_embeddings_report(g: &Graph, cfg: &WalkConfig) -> Result<AdjacencyReport> {
    let walks = generate_walks(g, cfg)?;
    let n = g.num_nodes();
    let dim = cfg.dim;
    let isolated_nodes = (0..n).filter(|&v| g.neighbors(v).is_empty()).count();

    let mut rng = stream(cfg.seed, u64::MAX - 1, 0);
    let bound = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-bound..bound)).collect();
    let mut output = vec![0.0; n * dim];

    // Negative table: unigram counts raised to 3/4.
    let mut counts = vec![0usize; n];
    for w in &walks {
        for &v in w {
            counts[v] += 1;
        }
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &c in &counts {
        acc += (c as f64).powf(0.75);
        cumulative.push(acc);
    }
    let total_tokens: usize = walks.iter().map(Vec::len).sum();
    let total_steps = (cfg.epochs * total_tokens).max(1) as f64;
    let mut step = 0usize;
    let mut grad = vec![0.0; dim];

    for _ in 0..cfg.epochs {
        for walk in &walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = (cfg.learning_rate * (1.0 - step as f64 / total_steps)).max(cfg.learning_rate * 1e-4);
                step += 1;
                let reach = rng.random_range(1..=cfg.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let cin = &mut input[center * dim..(center + 1) * dim];
                    for d in 0..=cfg.negatives {
                        let (target, label) = if d == 0 {
                            (context, 1.0)
                        } else {
                            let r = rng.random::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= r).min(n - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let f: f64 = cin.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(f)) * lr;
                        for k in 0..dim {
                            grad[k] += g * out[k];
                            out[k] += g * cin[k];
                        }
                    }
                    for (c, g) in cin.iter_mut().zip(&grad) {
                        *c += g;
                    }
                }
            }
        }
    }

    let matrix = Array2::from_shape_vec((n, dim), input).expect("n * dim");
    Ok(AdjacencyReport {
        embeddings: EmbeddingSet::new(matrix, EmbeddingKind::Adjacency, Provenance::Generated)?,
        isolated_nodes,
        num_walks: walks.len(),
    })
}

fn sigmoid(x: f64) -> f64 {
    if x > 20.0 {
        1.0
    } else if x < -20.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}
