//! Role embeddings from heat-kernel wavelets.
//!
//! For node `v` the wavelet `ψ_v` is column `v` of `exp(-s L)`, with `L` the
//! normalized Laplacian of v's connected component. Its entries are read as
//! an empirical distribution and summarized by the characteristic function
//! `φ_v(t) = mean_m exp(i t ψ_mv)` sampled on an even grid of `t`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EmbeddingKind, EmbeddingSet, Provenance};
use crate::error::{HgmnError, Result};
use crate::graph::Graph;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletConfig {
    /// Heat scales. Empty selects one scale per component automatically.
    pub scales: Vec<f64>,
    /// Number of characteristic-function sample points T.
    pub num_points: usize,
    /// Sample points are evenly spaced on `[0, t_max]`.
    pub t_max: f64,
    pub chebyshev_order: usize,
    /// Components up to this size use an exact eigendecomposition.
    pub exact_max_nodes: usize,
    /// Target accuracy for wavelet coefficients on the Chebyshev path.
    pub tolerance: f64,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            scales: Vec::new(),
            num_points: 25,
            t_max: 100.0,
            chebyshev_order: 30,
            exact_max_nodes: 2000,
            tolerance: 1e-4,
        }
    }
}

impl WaveletConfig {
    /// Embedding width `2 · T · |scales|`.
    pub fn dim(&self) -> usize {
        2 * self.num_points * self.scales.len().max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.num_points == 0 {
            return Err(HgmnError::Config("num_points must be >= 1".into()));
        }
        if let Some(s) = self.scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(HgmnError::Config(format!("wavelet scale {s} must be > 0")));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(HgmnError::Config("t_max must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        if self.num_points == 1 {
            return vec![0.0];
        }
        let step = self.t_max / (self.num_points - 1) as f64;
        (0..self.num_points).map(|j| j as f64 * step).collect()
    }
}

const ETA_MAX: f64 = 0.95;
const ETA_MIN: f64 = 0.80;

/// Midpoint of the heat-scale band `[-ln η_max, -ln η_min] · sqrt(0.5 / λ₁)`,
/// where `λ₁` is the smallest nonzero Laplacian eigenvalue.
pub fn auto_scale(lambda_1: f64) -> f64 {
    let k = (0.5 / lambda_1).sqrt();
    0.5 * (-ETA_MAX.ln() - ETA_MIN.ln()) * k
}

/// Normalized adjacency `D^{-1/2} A D^{-1/2}` of one component, local ids.
struct ComponentOperator {
    nodes: Vec<usize>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl ComponentOperator {
    fn new(g: &Graph, nodes: &[usize]) -> Self {
        let mut local = std::collections::HashMap::with_capacity(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            local.insert(v, i);
        }
        let deg: Vec<f64> = nodes.iter().map(|&v| g.neighbors(v).len() as f64).collect();
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, &v) in nodes.iter().enumerate() {
            for w in g.neighbors(v) {
                let j = local[w];
                cols.push(j);
                vals.push(1.0 / (deg[i] * deg[j]).sqrt());
            }
            offsets.push(cols.len());
        }
        ComponentOperator {
            nodes: nodes.to_vec(),
            offsets,
            cols,
            vals,
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `out = Â x`.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.len()) {
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn laplacian_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = DMatrix::identity(n, n);
        for i in 0..n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                l[(i, self.cols[k])] -= self.vals[k];
            }
        }
        l
    }

    /// Smallest nonzero Laplacian eigenvalue by power iteration on `I + Â`
    /// restricted to the complement of the null vector `D^{1/2} 1`.
    fn fiedler_value(&self, g: &Graph) -> f64 {
        let n = self.len();
        let mut null: Vec<f64> = self.nodes.iter().map(|&v| (g.neighbors(v).len() as f64).sqrt()).collect();
        normalize(&mut null);
        let mut x: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7548776662 + 0.5698402910).fract() - 0.5).collect();
        let mut y = vec![0.0; n];
        let mut mu = 0.0;
        for _ in 0..2000 {
            project_out(&mut x, &null);
            normalize(&mut x);
            self.apply(&x, &mut y);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += xi;
            }
            let next: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
            std::mem::swap(&mut x, &mut y);
            if (next - mu).abs() < 1e-13 {
                mu = next;
                break;
            }
            mu = next;
        }
        (2.0 - mu).max(1e-12)
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|a| *a /= n);
    }
}

fn project_out(x: &mut [f64], u: &[f64]) {
    let d: f64 = x.iter().zip(u).map(|(a, b)| a * b).sum();
    x.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
}

/// Chebyshev coefficients of `exp(-s λ)` on `λ ∈ [0, 2]` (mapped to
/// `x = λ - 1`), for `f ≈ c₀/2 + Σ_{k≥1} c_k T_k(x)`.
pub fn chebyshev_coefficients(s: f64, order: usize) -> Vec<f64> {
    let m = order + 64;
    let theta: Vec<f64> = (0..m).map(|j| std::f64::consts::PI * (j as f64 + 0.5) / m as f64).collect();
    let fvals: Vec<f64> = theta.iter().map(|t| (-s * (t.cos() + 1.0)).exp()).collect();
    (0..=order)
        .map(|k| {
            let sum: f64 = theta.iter().zip(&fvals).map(|(t, f)| f * (k as f64 * t).cos()).sum();
            2.0 * sum / m as f64
        })
        .collect()
}

/// Heat kernel `exp(-s L)` of the whole graph by dense eigendecomposition.
/// Isolated nodes have a zero Laplacian row.
pub fn heat_kernel_exact(g: &Graph, s: f64) -> Array2<f64> {
    let nodes: Vec<usize> = (0..g.num_nodes()).collect();
    let op = ComponentOperator::new(g, &nodes);
    let mut l = op.laplacian_dense();
    for v in 0..g.num_nodes() {
        if g.neighbors(v).is_empty() {
            l[(v, v)] = 0.0;
        }
    }
    let eig = SymmetricEigen::new(l);
    kernel_from_eigen(&eig, s)
}

fn kernel_from_eigen(eig: &SymmetricEigen<f64, nalgebra::Dyn>, s: f64) -> Array2<f64> {
    let u = &eig.eigenvectors;
    let n = u.nrows();
    let mut scaled = u.clone();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let w = (-s * lam.max(0.0)).exp();
        scaled.column_mut(k).scale_mut(w);
    }
    let k = scaled * u.transpose();
    Array2::from_shape_fn((n, n), |(i, j)| k[(i, j)])
}

/// Characteristic-function samples of one wavelet, written as
/// interleaved `[Re φ(t_j), Im φ(t_j)]` pairs.
fn characteristic(psi: &[f64], grid: &[f64], out: &mut [f64]) {
    let inv = 1.0 / psi.len() as f64;
    for (j, &t) in grid.iter().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for &p in psi {
            let (sn, cs) = (t * p).sin_cos();
            re += cs;
            im += sn;
        }
        out[2 * j] = re * inv;
        out[2 * j + 1] = im * inv;
    }
}

/// Role embeddings, one row per node, width [`WaveletConfig::dim`].
pub fn role_embeddings(g: &Graph, cfg: &WaveletConfig) -> Result<EmbeddingSet> {
    cfg.validate()?;
    let grid = cfg.grid();
    let t = grid.len();
    let n_scales = cfg.scales.len().max(1);
    let width = cfg.dim();
    let mut out = Array2::zeros((g.num_nodes(), width));

    for comp in g.components() {
        let nc = comp.len();
        if nc == 1 {
            // 1×1 zero Laplacian: ψ = [1] at every scale.
            let mut row = vec![0.0; 2 * t];
            characteristic(&[1.0], &grid, &mut row);
            for si in 0..n_scales {
                for (k, x) in row.iter().enumerate() {
                    out[[comp[0], si * 2 * t + k]] = *x;
                }
            }
            continue;
        }
        let op = ComponentOperator::new(g, &comp);
        let rows: Vec<Vec<f64>> = if nc <= cfg.exact_max_nodes {
            let eig = SymmetricEigen::new(op.laplacian_dense());
            let scales = if cfg.scales.is_empty() {
                let mut lams: Vec<f64> = eig.eigenvalues.iter().copied().collect();
                lams.sort_by(f64::total_cmp);
                vec![auto_scale(lams[1].max(1e-12))]
            } else {
                cfg.scales.clone()
            };
            let kernels: Vec<Array2<f64>> = scales.iter().map(|&s| kernel_from_eigen(&eig, s)).collect();
            parallel::map_range(nc, |i| {
                let mut row = vec![0.0; width];
                for (si, k) in kernels.iter().enumerate() {
                    let col: Vec<f64> = k.column(i).to_vec();
                    characteristic(&col, &grid, &mut row[si * 2 * t..(si + 1) * 2 * t]);
                }
                row
            })
        } else {
            let scales = if cfg.scales.is_empty() {
                vec![auto_scale(op.fiedler_value(g))]
            } else {
                cfg.scales.clone()
            };
            let mut coeffs = Vec::with_capacity(scales.len());
            for &s in &scales {
                let ext = chebyshev_coefficients(s, cfg.chebyshev_order + 20);
                let estimate: f64 = ext[cfg.chebyshev_order + 1..].iter().map(|c| c.abs()).sum();
                if estimate > cfg.tolerance {
                    return Err(HgmnError::ChebyshevNotConverged {
                        order: cfg.chebyshev_order,
                        tolerance: cfg.tolerance,
                        estimate,
                    });
                }
                coeffs.push(ext[..=cfg.chebyshev_order].to_vec());
            }
            parallel::map_range(nc, |i| {
                let mut row = vec![0.0; width];
                for (si, c) in coeffs.iter().enumerate() {
                    let psi = chebyshev_column(&op, c, i);
                    characteristic(&psi, &grid, &mut row[si * 2 * t..(si + 1) * 2 * t]);
                }
                row
            })
        };
        for (i, row) in rows.into_iter().enumerate() {
            for (k, x) in row.into_iter().enumerate() {
                out[[comp[i], k]] = x;
            }
        }
    }
    EmbeddingSet::new(out, EmbeddingKind::Role, Provenance::Generated)
}

/// Column `i` of `Σ c_k T_k(L - I)` via the three-term recurrence.
fn chebyshev_column(op: &ComponentOperator, c: &[f64], i: usize) -> Vec<f64> {
    let n = op.len();
    let mut prev = vec![0.0; n];
    prev[i] = 1.0;
    let mut acc: Vec<f64> = prev.iter().map(|x| 0.5 * c[0] * x).collect();
    if c.len() == 1 {
        return acc;
    }
    // L - I = -Â
    let mut cur = vec![0.0; n];
    op.apply(&prev, &mut cur);
    cur.iter_mut().for_each(|x| *x = -*x);
    acc.iter_mut().zip(&cur).for_each(|(a, x)| *a += c[1] * x);
    let mut next = vec![0.0; n];
    for &ck in &c[2..] {
        op.apply(&cur, &mut next);
        for (nx, &p) in next.iter_mut().zip(&prev) {
            *nx = -2.0 * *nx - p;
        }
        acc.iter_mut().zip(&next).for_each(|(a, x)| *a += ck * x);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> Graph {
        let e: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        Graph::from_edges(leaves + 1, &e).unwrap()
    }

    fn ring(n: usize, offset: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (offset + i, offset + (i + 1) % n)).collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn single_node_is_unit_circle() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let cfg = WaveletConfig::default();
        let e = role_embeddings(&g, &cfg).unwrap();
        assert_eq!(e.dim(), 50);
        for (j, t) in cfg.grid().into_iter().enumerate() {
            assert!((e.matrix()[[0, 2 * j]] - t.cos()).abs() < 1e-15);
            assert!((e.matrix()[[0, 2 * j + 1]] - t.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn star_leaves_are_equivalent() {
        let e = role_embeddings(&star(5), &WaveletConfig::default()).unwrap();
        let m = e.matrix();
        for l in 2..=5 {
            assert!(max_diff(m.row(1).as_slice().unwrap(), m.row(l).as_slice().unwrap()) < 1e-9);
        }
        assert!(max_diff(m.row(0).as_slice().unwrap(), m.row(1).as_slice().unwrap()) > 1e-3);
    }

    #[test]
    fn disjoint_copies_match() {
        let mut edges = vec![(0, 1), (1, 2), (2, 3), (1, 3)];
        edges.extend(edges.clone().into_iter().map(|(a, b)| (a + 4, b + 4)));
        let g = Graph::from_edges(8, &edges).unwrap();
        let e = role_embeddings(&g, &WaveletConfig::default()).unwrap();
        for v in 0..4 {
            let a = e.matrix().row(v).to_vec();
            let b = e.matrix().row(v + 4).to_vec();
            assert!(max_diff(&a, &b) < 1e-9);
        }
    }

    #[test]
    fn characteristic_function_is_bounded() {
        let g = Graph::from_edges(7, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (5, 6)]).unwrap();
        let cfg = WaveletConfig {
            scales: vec![0.5, 2.0],
            ..Default::default()
        };
        let e = role_embeddings(&g, &cfg).unwrap();
        assert_eq!(e.dim(), 100);
        for row in e.matrix().rows() {
            for pair in row.as_slice().unwrap().chunks(2) {
                assert!(pair[0].hypot(pair[1]) <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn heat_kernel_of_single_edge() {
        // L = [[1,-1],[-1,1]], eigenvalues 0 and 2.
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let k = heat_kernel_exact(&g, 0.7);
        let e = (-1.4f64).exp();
        assert!((k[[0, 0]] - 0.5 * (1.0 + e)).abs() < 1e-14);
        assert!((k[[0, 1]] - 0.5 * (1.0 - e)).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_path_matches_exact() {
        let mut edges = ring(12, 0);
        edges.extend([(0, 6), (3, 9), (1, 4)]);
        let g = Graph::from_edges(12, &edges).unwrap();
        let base = WaveletConfig {
            scales: vec![1.3],
            ..Default::default()
        };
        let exact = role_embeddings(&g, &base).unwrap();
        let cheb = role_embeddings(&g, &WaveletConfig { exact_max_nodes: 0, ..base }).unwrap();
        let d = max_diff(exact.matrix().as_slice().unwrap(), cheb.matrix().as_slice().unwrap());
        // φ is 1-Lipschitz in ψ scaled by t ≤ 100.
        assert!(d < 100.0 * 1e-4, "{d}");
        let k = heat_kernel_exact(&g, 1.3);
        let coeffs = chebyshev_coefficients(1.3, 30);
        let op = ComponentOperator::new(&g, &(0..12).collect::<Vec<_>>());
        for i in 0..12 {
            let col = chebyshev_column(&op, &coeffs, i);
            assert!(max_diff(&col, &k.column(i).to_vec()) < 1e-10);
        }
    }

    #[test]
    fn auto_scale_uses_fiedler_value() {
        let edges = ring(10, 0);
        let g = Graph::from_edges(10, &edges).unwrap();
        let op = ComponentOperator::new(&g, &(0..10).collect::<Vec<_>>());
        // C10 normalized Laplacian: 1 - cos(2πk/10)
        let want = 1.0 - (2.0 * std::f64::consts::PI / 10.0).cos();
        assert!((op.fiedler_value(&g) - want).abs() < 1e-8);
        let s = auto_scale(want);
        assert!(s > 0.0 && s.is_finite());
    }

    #[test]
    fn low_order_reports_nonconvergence() {
        let mut edges = ring(8, 0);
        edges.push((0, 4));
        let g = Graph::from_edges(8, &edges).unwrap();
        let cfg = WaveletConfig {
            scales: vec![50.0],
            chebyshev_order: 3,
            exact_max_nodes: 0,
            ..Default::default()
        };
        let err = role_embeddings(&g, &cfg).unwrap_err();
        assert!(err.to_string().contains("increase chebyshev_order"), "{err}");
    }

    #[test]
    fn relabeling_permutes_rows() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4), (4, 5)];
        let g = Graph::from_edges(6, &edges).unwrap();
        let perm = [3, 5, 0, 1, 4, 2];
        let pe: Vec<_> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let h = Graph::from_edges(6, &pe).unwrap();
        let cfg = WaveletConfig::default();
        let eg = role_embeddings(&g, &cfg).unwrap();
        let eh = role_embeddings(&h, &cfg).unwrap();
        for (v, &pv) in perm.iter().enumerate() {
            let d = max_diff(&eg.matrix().row(v).to_vec(), &eh.matrix().row(pv).to_vec());
            assert!(d < 1e-8, "node {v}: {d}");
        }
    }
}
