//! The full model: fusion block, hypergraph convolution stack, residual
//! connection and softmax classifier.

use std::path::Path;
use std::sync::Arc;

use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{SsmVars, Tape, Var};
use crate::error::{HgmnError, Result};
use crate::hypergraph::PropagationOperator;
use crate::ssm::{softplus, softplus_inverse, SsmParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// How role and adjacency features are weighted into the fused input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Gates from the SSM scan and gate head.
    #[default]
    Ssm,
    /// Fixed equal gates; SSM and gate head are bypassed.
    Mean,
    RoleOnly,
    AdjacencyOnly,
}

impl FusionMode {
    fn fixed_gates(self) -> Option<[f64; 2]> {
        match self {
            FusionMode::Ssm => None,
            FusionMode::Mean => Some([0.5, 0.5]),
            FusionMode::RoleOnly => Some([1.0, 0.0]),
            FusionMode::AdjacencyOnly => Some([0.0, 1.0]),
        }
    }
}

/// Which token the scan sees first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenOrder {
    #[default]
    RoleFirst,
    AdjacencyFirst,
}

/// Source of `X_1` in `J = X_1 W_res + X_last`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualInput {
    /// The fused embedding.
    #[default]
    Fused,
    /// A learned projection of the concatenated raw role and adjacency features.
    Projection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub role_dim: usize,
    pub adj_dim: usize,
    pub hidden_dim: usize,
    pub state_dim: usize,
    pub num_layers: usize,
    pub num_classes: usize,
    pub hidden_activation: Activation,
    pub final_activation: Activation,
    pub fusion: FusionMode,
    pub token_order: TokenOrder,
    pub residual: bool,
    pub residual_input: ResidualInput,
}

impl ModelConfig {
    pub fn new(role_dim: usize, adj_dim: usize, num_classes: usize) -> Self {
        ModelConfig {
            role_dim,
            adj_dim,
            hidden_dim: 64,
            state_dim: 16,
            num_layers: 2,
            num_classes,
            hidden_activation: Activation::Relu,
            final_activation: Activation::Identity,
            fusion: FusionMode::Ssm,
            token_order: TokenOrder::RoleFirst,
            residual: true,
            residual_input: ResidualInput::Fused,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.state_dim == 0 || self.num_classes == 0 {
            return Err(HgmnError::Config(
                "hidden_dim, state_dim and num_classes must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Affine map `x W + 1 b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    /// 1 × out.
    pub bias: Array2<f64>,
}

/// Learnable SSM parameters in unconstrained form.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmBlock {
    /// `A = −exp(a_log)`, F_h × n.
    pub a_log: Array2<f64>,
    pub b: Array2<f64>,
    pub c: Array2<f64>,
    /// `Δ = softplus(delta_raw)`, 1 × F_h.
    pub delta_raw: Array2<f64>,
}

impl SsmBlock {
    /// Continuous-time view of the parameters.
    pub fn params(&self) -> SsmParams {
        SsmParams {
            a: self.a_log.mapv(|x| -x.exp()),
            b: self.b.clone(),
            c: self.c.clone(),
            delta: self.delta_raw.row(0).mapv(softplus),
        }
    }
}

/// Projections, SSM and gate head producing the fused embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionBlock {
    pub proj_role: Linear,
    pub proj_adj: Linear,
    pub ssm: SsmBlock,
    /// 2F_h × 2 map from `[y_1 | y_2]` to gate logits.
    pub gate: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgmnModel {
    pub config: ModelConfig,
    pub fusion: FusionBlock,
    /// Convolution weights, each F_h × F_h.
    pub conv: Vec<Array2<f64>>,
    pub residual: Array2<f64>,
    /// Present when `residual_input` is `Projection`: (F_r + F_a) × F_h.
    pub input_proj: Option<Array2<f64>>,
    pub classifier: Linear,
}

/// Fixed inputs to a forward pass.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub role: Array2<f64>,
    pub adjacency: Array2<f64>,
    pub propagation: Arc<PropagationOperator>,
}

impl ModelInputs {
    pub fn new(role: Array2<f64>, adjacency: Array2<f64>, propagation: Arc<PropagationOperator>) -> Result<Self> {
        let n = propagation.num_nodes();
        for (what, m) in [("role", &role), ("adjacency", &adjacency)] {
            if m.nrows() != n {
                return Err(HgmnError::shape(
                    "model inputs",
                    format!("{what} features have {} rows, graph has {n} nodes", m.nrows()),
                ));
            }
        }
        Ok(ModelInputs {
            role,
            adjacency,
            propagation,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.role.nrows()
    }
}

/// Tape handles produced by [`HgmnModel::forward`].
#[derive(Debug, Clone)]
pub struct Forward {
    /// One var per tensor, in [`HgmnModel::tensors`] order.
    pub params: Vec<Var>,
    pub gates: Var,
    pub fused: Var,
    pub last: Var,
    pub joint: Var,
    pub logits: Var,
    pub probs: Var,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

fn linear(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Linear {
    Linear {
        weight: xavier(rng, rows, cols),
        bias: Array2::zeros((1, cols)),
    }
}

pub const PROB_CLAMP: f64 = 1e-12;

impl HgmnModel {
    /// Seeded initialization.
    ///
    /// `A[f, j] = −(j + 1)`, `Δ` log-uniform in `[0.01, 0.1]` per channel,
    /// `B = 1`, `C` uniform in `±1/√n`, Xavier-uniform weight matrices and
    /// zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (fh, n) = (config.hidden_dim, config.state_dim);
        let proj_role = linear(&mut rng, config.role_dim, fh);
        let proj_adj = linear(&mut rng, config.adj_dim, fh);
        let cb = 1.0 / (n as f64).sqrt();
        let ssm = SsmBlock {
            a_log: Array2::from_shape_fn((fh, n), |(_, j)| ((j + 1) as f64).ln()),
            b: Array2::ones((fh, n)),
            c: Array2::from_shape_simple_fn((fh, n), || rng.random_range(-cb..cb)),
            delta_raw: Array2::from_shape_simple_fn((1, fh), || {
                let d = (rng.random_range(0.01f64.ln()..0.1f64.ln())).exp();
                softplus_inverse(d)
            }),
        };
        let gate = linear(&mut rng, 2 * fh, 2);
        let conv = (0..config.num_layers).map(|_| xavier(&mut rng, fh, fh)).collect();
        let residual = xavier(&mut rng, fh, fh);
        let input_proj = (config.residual_input == ResidualInput::Projection)
            .then(|| xavier(&mut rng, config.role_dim + config.adj_dim, fh));
        let classifier = linear(&mut rng, fh, config.num_classes);
        Ok(HgmnModel {
            config,
            fusion: FusionBlock {
                proj_role,
                proj_adj,
                ssm,
                gate,
            },
            conv,
            residual,
            input_proj,
            classifier,
        })
    }

    /// Every learnable tensor with a stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let f = &self.fusion;
        let mut v: Vec<(String, &Array2<f64>)> = vec![
            ("fusion.proj_role.weight".into(), &f.proj_role.weight),
            ("fusion.proj_role.bias".into(), &f.proj_role.bias),
            ("fusion.proj_adj.weight".into(), &f.proj_adj.weight),
            ("fusion.proj_adj.bias".into(), &f.proj_adj.bias),
            ("fusion.ssm.a_log".into(), &f.ssm.a_log),
            ("fusion.ssm.b".into(), &f.ssm.b),
            ("fusion.ssm.c".into(), &f.ssm.c),
            ("fusion.ssm.delta_raw".into(), &f.ssm.delta_raw),
            ("fusion.gate.weight".into(), &f.gate.weight),
            ("fusion.gate.bias".into(), &f.gate.bias),
        ];
        for (l, w) in self.conv.iter().enumerate() {
            v.push((format!("conv.{l}.weight"), w));
        }
        v.push(("residual.weight".into(), &self.residual));
        if let Some(p) = &self.input_proj {
            v.push(("residual.input_proj".into(), p));
        }
        v.push(("classifier.weight".into(), &self.classifier.weight));
        v.push(("classifier.bias".into(), &self.classifier.bias));
        v
    }

    /// Mutable view in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let f = &mut self.fusion;
        let mut v: Vec<&mut Array2<f64>> = vec![
            &mut f.proj_role.weight,
            &mut f.proj_role.bias,
            &mut f.proj_adj.weight,
            &mut f.proj_adj.bias,
            &mut f.ssm.a_log,
            &mut f.ssm.b,
            &mut f.ssm.c,
            &mut f.ssm.delta_raw,
            &mut f.gate.weight,
            &mut f.gate.bias,
        ];
        v.extend(self.conv.iter_mut());
        v.push(&mut self.residual);
        if let Some(p) = &mut self.input_proj {
            v.push(p);
        }
        v.push(&mut self.classifier.weight);
        v.push(&mut self.classifier.bias);
        v
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Whether each tensor takes part in the forward pass under the
    /// current configuration. Inactive tensors get no gradient, no
    /// regularization and no optimizer updates.
    pub fn active_mask(&self) -> Vec<bool> {
        let fusion = self.config.fusion;
        self.tensors()
            .iter()
            .map(|(name, _)| {
                let n = name.as_str();
                if n.starts_with("fusion.ssm.") || n.starts_with("fusion.gate.") {
                    fusion == FusionMode::Ssm
                } else if n.starts_with("fusion.proj_role.") {
                    fusion != FusionMode::AdjacencyOnly
                } else if n.starts_with("fusion.proj_adj.") {
                    fusion != FusionMode::RoleOnly
                } else if n.starts_with("residual.") {
                    self.config.residual
                } else {
                    true
                }
            })
            .collect()
    }

    /// Records the forward pass on `tape`.
    pub fn forward(&self, tape: &mut Tape, inputs: &ModelInputs) -> Result<Forward> {
        let cfg = &self.config;
        if inputs.role.ncols() != cfg.role_dim || inputs.adjacency.ncols() != cfg.adj_dim {
            return Err(HgmnError::shape(
                "forward",
                format!(
                    "model expects {}/{} input features, got {}/{}",
                    cfg.role_dim,
                    cfg.adj_dim,
                    inputs.role.ncols(),
                    inputs.adjacency.ncols()
                ),
            ));
        }
        let params: Vec<Var> = self.tensors().into_iter().map(|(_, t)| tape.leaf(t.clone())).collect();
        let mut it = params.iter().copied();
        let mut next = || it.next().expect("tensor layout");
        let (pr_w, pr_b, pa_w, pa_b) = (next(), next(), next(), next());
        let ssm = (next(), next(), next(), next());
        let (g_w, g_b) = (next(), next());
        let conv: Vec<Var> = (0..self.conv.len()).map(|_| next()).collect();
        let res_w = next();
        let in_proj = self.input_proj.as_ref().map(|_| next());
        let (cls_w, cls_b) = (next(), next());

        let n = inputs.num_nodes();
        let xr = tape.leaf(inputs.role.clone());
        let xa = tape.leaf(inputs.adjacency.clone());
        let hr = tape.matmul(xr, pr_w)?;
        let hr = tape.add_row(hr, pr_b)?;
        let ha = tape.matmul(xa, pa_w)?;
        let ha = tape.add_row(ha, pa_b)?;

        let gates = match cfg.fusion.fixed_gates() {
            Some([r, a]) => tape.leaf(Array2::from_shape_fn((n, 2), |(_, k)| if k == 0 { r } else { a })),
            None => {
                let (first, second) = match cfg.token_order {
                    TokenOrder::RoleFirst => (hr, ha),
                    TokenOrder::AdjacencyFirst => (ha, hr),
                };
                let y = tape.ssm_scan(SsmVars {
                    first,
                    second,
                    a_log: ssm.0,
                    b: ssm.1,
                    c: ssm.2,
                    delta_raw: ssm.3,
                })?;
                let logits = tape.matmul(y, g_w)?;
                let logits = tape.add_row(logits, g_b)?;
                let gates = tape.row_softmax(logits);
                match cfg.token_order {
                    TokenOrder::RoleFirst => gates,
                    // logits were produced as [adjacency, role]
                    TokenOrder::AdjacencyFirst => {
                        let swap = tape.leaf(ndarray::array![[0.0, 1.0], [1.0, 0.0]]);
                        tape.matmul(gates, swap)?
                    }
                }
            }
        };
        let fused = tape.gate_combine(gates, hr, ha)?;

        let mut x = fused;
        for (l, &w) in conv.iter().enumerate() {
            let px = tape.propagate(&inputs.propagation, x)?;
            let z = tape.matmul(px, w)?;
            let act = if l + 1 == conv.len() {
                cfg.final_activation
            } else {
                cfg.hidden_activation
            };
            x = match act {
                Activation::Relu => tape.relu(z),
                Activation::Identity => z,
            };
        }
        let last = x;

        let joint = if cfg.residual {
            let x1 = match in_proj {
                Some(w) => {
                    let raw = tape.leaf(concatenate![Axis(1), inputs.role, inputs.adjacency]);
                    tape.matmul(raw, w)?
                }
                None => fused,
            };
            let skip = tape.matmul(x1, res_w)?;
            tape.add(skip, last)?
        } else {
            last
        };

        let logits = tape.matmul(joint, cls_w)?;
        let logits = tape.add_row(logits, cls_b)?;
        let probs = tape.row_softmax(logits);
        Ok(Forward {
            params,
            gates,
            fused,
            last,
            joint,
            logits,
            probs,
        })
    }

    /// Cross-entropy over `targets` plus `lambda` times the squared norm
    /// of every active tensor.
    pub fn loss(&self, tape: &mut Tape, fwd: &Forward, targets: Arc<[(usize, usize)]>, lambda: f64) -> Result<Var> {
        let mut total = tape.masked_nll(fwd.probs, targets, PROB_CLAMP)?;
        if lambda != 0.0 {
            for (&v, active) in fwd.params.iter().zip(self.active_mask()) {
                if active {
                    let sq = tape.sum_squares(v);
                    let sq = tape.scale(sq, lambda);
                    total = tape.add(total, sq)?;
                }
            }
        }
        Ok(total)
    }

    /// Class probabilities for every node.
    pub fn predict_proba(&self, inputs: &ModelInputs) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let fwd = self.forward(&mut tape, inputs)?;
        Ok(tape.value(fwd.probs).clone())
    }

    /// Arg-max class per node, ties toward the lowest class id.
    pub fn predict(&self, inputs: &ModelInputs) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(inputs)?))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            tensors: self
                .tensors()
                .into_iter()
                .map(|(name, t)| TensorRecord {
                    name,
                    shape: [t.nrows(), t.ncols()],
                    data: t.iter().copied().collect(),
                })
                .collect(),
            manifest: None,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(HgmnError::Config(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let mut model = HgmnModel::init(ck.config.clone(), 0)?;
        let names: Vec<String> = model.tensors().into_iter().map(|(n, _)| n).collect();
        if names.len() != ck.tensors.len() {
            return Err(HgmnError::Config(format!(
                "checkpoint has {} tensors, model expects {}",
                ck.tensors.len(),
                names.len()
            )));
        }
        for ((slot, name), rec) in model.tensors_mut().into_iter().zip(&names).zip(&ck.tensors) {
            if &rec.name != name || rec.shape != [slot.nrows(), slot.ncols()] {
                return Err(HgmnError::Config(format!(
                    "checkpoint tensor {} {:?} does not match {name} {:?}",
                    rec.name,
                    rec.shape,
                    slot.dim()
                )));
            }
            *slot = Array2::from_shape_vec((rec.shape[0], rec.shape[1]), rec.data.clone())
                .map_err(|e| HgmnError::Config(e.to_string()))?;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path, manifest: Option<String>) -> Result<()> {
        let mut ck = self.to_checkpoint();
        ck.manifest = manifest;
        let text = serde_json::to_string(&ck)?;
        std::fs::write(path, text).map_err(|e| HgmnError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HgmnError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        Self::from_checkpoint(&ck)
    }
}

pub fn argmax_rows(p: &Array2<f64>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (k, &x) in r.iter().enumerate() {
                if x > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub const CHECKPOINT_FORMAT: &str = "hgmn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON checkpoint: model configuration plus every tensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub tensors: Vec<TensorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::hypergraph::{build_link_hypergraph, propagation_operator, LinkOptions, Normalization};

    fn inputs(n: usize, fr: usize, fa: usize) -> ModelInputs {
        let g = Graph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap();
        let h = build_link_hypergraph(&g, LinkOptions::default()).unwrap();
        let p = Arc::new(propagation_operator(&h, Normalization::Inverse).unwrap());
        let role = Array2::from_shape_fn((n, fr), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
        let adj = Array2::from_shape_fn((n, fa), |(i, j)| ((i + 2 * j) as f64 * 0.21).cos());
        ModelInputs::new(role, adj, p).unwrap()
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            hidden_dim: 4,
            state_dim: 3,
            ..ModelConfig::new(3, 2, 2)
        }
    }

    #[test]
    fn probabilities_are_normalized() {
        let m = HgmnModel::init(small_config(), 1).unwrap();
        let p = m.predict_proba(&inputs(5, 3, 2)).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn forward_is_pure() {
        let m = HgmnModel::init(small_config(), 1).unwrap();
        let x = inputs(5, 3, 2);
        assert_eq!(m.predict_proba(&x).unwrap(), m.predict_proba(&x).unwrap());
    }

    #[test]
    fn gates_are_convex() {
        let m = HgmnModel::init(small_config(), 2).unwrap();
        let mut t = Tape::new();
        let f = m.forward(&mut t, &inputs(5, 3, 2)).unwrap();
        for row in t.value(f.gates).rows() {
            assert!(row.iter().all(|&g| g >= 0.0));
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_layers_with_identity_residual() {
        let cfg = ModelConfig {
            num_layers: 0,
            ..small_config()
        };
        let mut m = HgmnModel::init(cfg, 3).unwrap();
        m.residual = Array2::eye(4);
        let mut t = Tape::new();
        let f = m.forward(&mut t, &inputs(5, 3, 2)).unwrap();
        assert_eq!(f.last, f.fused);
        assert_eq!(t.value(f.joint), &(t.value(f.fused) * 2.0));
    }

    #[test]
    fn input_feature_mismatch() {
        let m = HgmnModel::init(small_config(), 1).unwrap();
        assert!(m.predict_proba(&inputs(5, 4, 2)).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig {
            residual_input: ResidualInput::Projection,
            ..small_config()
        };
        let m = HgmnModel::init(cfg, 9).unwrap();
        let p = dir.path().join("model.json");
        m.save(&p, Some("manifest.json".into())).unwrap();
        let back = HgmnModel::load(&p).unwrap();
        assert_eq!(back, m);
        for ((_, a), (_, b)) in back.tensors().iter().zip(m.tensors()) {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn checkpoint_rejects_mismatched_tensors() {
        let m = HgmnModel::init(small_config(), 1).unwrap();
        let mut ck = m.to_checkpoint();
        ck.tensors[0].shape = [1, 1];
        assert!(HgmnModel::from_checkpoint(&ck).is_err());
        let mut ck = m.to_checkpoint();
        ck.version = 99;
        assert!(HgmnModel::from_checkpoint(&ck).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        let p = ndarray::array![[0.5, 0.5], [0.2, 0.8], [0.4, 0.4]];
        assert_eq!(argmax_rows(&p), vec![0, 1, 0]);
    }

    #[test]
    fn delta_initialization_range() {
        let m = HgmnModel::init(ModelConfig::new(3, 3, 2), 4).unwrap();
        let d = m.fusion.ssm.params().delta;
        assert!(d.iter().all(|&x| (0.01 - 1e-12..=0.1 + 1e-12).contains(&x)));
        assert!(m.fusion.ssm.params().a.iter().all(|&a| a < 0.0));
    }
}
