//! Training loop, multi-trial runs, ablations and parameter sweeps.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::embeddings::{
    adjacency_embeddings, load_embeddings, role_embeddings, EmbeddingKind, WalkConfig, WaveletConfig,
};
use crate::error::{HgmnError, Result};
use crate::eval::{micro_f1, ReportRow};
use crate::graph::{sample_split, Graph, SplitConfig, SplitSpec};
use crate::hypergraph::{build_hypergraph, propagation_operator, HypergraphKind, LinkOptions, Normalization};
use crate::nn::model::{argmax_rows, Activation, FusionMode, HgmnModel, ModelConfig, ModelInputs, ResidualInput, TokenOrder};
use crate::nn::{Adam, AdamConfig, Tape};
use crate::parallel;

/// Which embedding streams reach the classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    #[default]
    Both,
    RoleOnly,
    AdjacencyOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hypergraph_kind: HypergraphKind,
    pub include_center: bool,
    pub normalization: Normalization,
    pub role: WaveletConfig,
    pub adjacency: WalkConfig,
    /// Precomputed role embeddings; replaces generation when set.
    pub role_path: Option<PathBuf>,
    pub adjacency_path: Option<PathBuf>,
    /// Scale every input column to zero mean and unit variance.
    pub standardize_inputs: bool,
    pub hidden_dim: usize,
    pub state_dim: usize,
    pub num_layers: usize,
    pub hidden_activation: Activation,
    pub final_activation: Activation,
    pub token_order: TokenOrder,
    pub residual_input: ResidualInput,
    pub lr: f64,
    pub weight_decay: f64,
    pub lambda_reg: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub imbalance_cap: Option<f64>,
    pub disable_residual: bool,
    pub disable_mamba: bool,
    pub features: FeatureSet,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hypergraph_kind: HypergraphKind::Link,
            include_center: true,
            normalization: Normalization::Inverse,
            role: WaveletConfig::default(),
            adjacency: WalkConfig::default(),
            role_path: None,
            adjacency_path: None,
            standardize_inputs: false,
            hidden_dim: 64,
            state_dim: 16,
            num_layers: 2,
            hidden_activation: Activation::Relu,
            final_activation: Activation::Identity,
            token_order: TokenOrder::RoleFirst,
            residual_input: ResidualInput::Fused,
            lr: 0.003,
            weight_decay: 5e-4,
            lambda_reg: 0.0,
            max_epochs: 500,
            patience: 50,
            seed: 0,
            test_fraction: 0.3,
            val_fraction: 0.2,
            imbalance_cap: None,
            disable_residual: false,
            disable_mamba: false,
            features: FeatureSet::Both,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HgmnError::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.max_epochs == 0 {
            return Err(HgmnError::Config("max_epochs must be >= 1".into()));
        }
        if !(self.lambda_reg >= 0.0 && self.weight_decay >= 0.0) {
            return Err(HgmnError::Config("lambda_reg and weight_decay must be >= 0".into()));
        }
        if self.disable_mamba && self.features != FeatureSet::Both {
            return Err(HgmnError::Config(
                "disable_mamba and a single-stream feature set are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    /// Variant label: `HGMN`, `HGMN/residual`, `HGMN/mamba`, ...
    pub fn variant(&self) -> String {
        let mut v = String::from("HGMN");
        if self.disable_residual {
            v.push_str("/residual");
        }
        if self.disable_mamba {
            v.push_str("/mamba");
        }
        match self.features {
            FeatureSet::Both => {}
            FeatureSet::RoleOnly => v.push_str("/role-only"),
            FeatureSet::AdjacencyOnly => v.push_str("/adj-only"),
        }
        v
    }

    fn fusion_mode(&self) -> FusionMode {
        match (self.disable_mamba, self.features) {
            (true, _) => FusionMode::Mean,
            (false, FeatureSet::Both) => FusionMode::Ssm,
            (false, FeatureSet::RoleOnly) => FusionMode::RoleOnly,
            (false, FeatureSet::AdjacencyOnly) => FusionMode::AdjacencyOnly,
        }
    }

    pub fn model_config(&self, role_dim: usize, adj_dim: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            role_dim,
            adj_dim,
            hidden_dim: self.hidden_dim,
            state_dim: self.state_dim,
            num_layers: self.num_layers,
            num_classes,
            hidden_activation: self.hidden_activation,
            final_activation: self.final_activation,
            fusion: self.fusion_mode(),
            token_order: self.token_order,
            residual: !self.disable_residual,
            residual_input: self.residual_input,
        }
    }

    pub fn split_config(&self, seed: u64) -> SplitConfig {
        SplitConfig {
            seed,
            test_fraction: self.test_fraction,
            val_fraction: self.val_fraction,
            imbalance_cap: self.imbalance_cap,
        }
    }
}

/// Hypergraph operator and input features, shared by every trial.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub inputs: ModelInputs,
    pub num_hyperedges: usize,
}

fn standardize(mut m: Array2<f64>) -> Array2<f64> {
    for mut col in m.axis_iter_mut(Axis(1)) {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        col.mapv_inplace(|x| if sd > 1e-12 { (x - mean) / sd } else { x - mean });
    }
    m
}

/// Builds the hypergraph operator and the role and adjacency features.
pub fn prepare(g: &Graph, cfg: &TrainConfig) -> Result<Prepared> {
    cfg.validate()?;
    let h = build_hypergraph(
        g,
        cfg.hypergraph_kind,
        LinkOptions {
            include_center: cfg.include_center,
        },
    )?;
    let p = Arc::new(propagation_operator(&h, cfg.normalization)?);
    let role = match &cfg.role_path {
        Some(path) => load_embeddings(path, EmbeddingKind::Role)?,
        None => role_embeddings(g, &cfg.role)?,
    };
    let adj = match &cfg.adjacency_path {
        Some(path) => load_embeddings(path, EmbeddingKind::Adjacency)?,
        None => adjacency_embeddings(g, &cfg.adjacency)?,
    };
    role.check_rows(g.num_nodes())?;
    adj.check_rows(g.num_nodes())?;
    let (mut r, mut a) = (role.into_matrix(), adj.into_matrix());
    if cfg.standardize_inputs {
        r = standardize(r);
        a = standardize(a);
    }
    Ok(Prepared {
        inputs: ModelInputs::new(r, a, p)?,
        num_hyperedges: h.num_edges(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_f1: f64,
    pub val_f1: f64,
}

/// Outcome of one training run. Micro-F1 values are fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub variant: String,
    pub hypergraph_kind: HypergraphKind,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Train micro-F1 of the returned model.
    pub train_f1: f64,
    pub val_f1: Option<f64>,
    pub test_f1: Option<f64>,
    pub history: Vec<EpochRecord>,
    /// Not serialized, so metric files stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl RunMetrics {
    /// The score used for aggregation: test, else validation, else train.
    pub fn score(&self) -> f64 {
        self.test_f1.or(self.val_f1).unwrap_or(self.train_f1)
    }
}

fn targets_for(g: &Graph, ids: &[usize]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|&v| {
            g.label(v)
                .ok_or_else(|| HgmnError::InvalidLabels(format!("node {v} is in the split but has no label")))
        })
        .collect()
}

fn f1_on(pred: &[usize], ids: &[usize], truth: &[usize]) -> Result<f64> {
    let p: Vec<usize> = ids.iter().map(|&v| pred[v]).collect();
    micro_f1(&p, truth)
}

/// Builds everything from scratch and trains once on `split`.
pub fn train(g: &Graph, split: &SplitSpec, cfg: &TrainConfig) -> Result<(HgmnModel, RunMetrics)> {
    let prep = prepare(g, cfg)?;
    train_prepared(g, &prep, split, cfg, cfg.seed)
}

/// Full-batch training with early stopping on validation micro-F1. With
/// no validation nodes, train micro-F1 is monitored instead. Returns the
/// parameters from the best epoch.
pub fn train_prepared(
    g: &Graph,
    prep: &Prepared,
    split: &SplitSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(HgmnModel, RunMetrics)> {
    cfg.validate()?;
    let start = Instant::now();
    if split.train_ids.is_empty() {
        return Err(HgmnError::Config("training set is empty".into()));
    }
    let train_y = targets_for(g, &split.train_ids)?;
    let val_y = targets_for(g, &split.val_ids)?;
    let test_y = targets_for(g, &split.test_ids)?;
    let targets: Arc<[(usize, usize)]> = split.train_ids.iter().copied().zip(train_y.iter().copied()).collect();

    let x = &prep.inputs;
    let mcfg = cfg.model_config(x.role.ncols(), x.adjacency.ncols(), g.num_classes());
    let mut model = HgmnModel::init(mcfg, seed)?;
    let names: Vec<String> = model.tensors().into_iter().map(|(n, _)| n).collect();
    let active = model.active_mask();
    let mut opt = Adam::new(AdamConfig {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        ..AdamConfig::default()
    });

    let mut history = Vec::new();
    let mut best: Option<(usize, f64, HgmnModel)> = None;
    for epoch in 0..cfg.max_epochs {
        let mut tape = Tape::new();
        let fwd = model.forward(&mut tape, x)?;
        let loss_var = model.loss(&mut tape, &fwd, targets.clone(), cfg.lambda_reg)?;
        let loss = tape.scalar(loss_var);
        if !loss.is_finite() {
            return Err(HgmnError::Diverged { epoch, loss });
        }
        let pred = argmax_rows(tape.value(fwd.probs));
        let train_f1 = f1_on(&pred, &split.train_ids, &train_y)?;
        let val_f1 = if split.val_ids.is_empty() {
            train_f1
        } else {
            f1_on(&pred, &split.val_ids, &val_y)?
        };
        history.push(EpochRecord {
            epoch,
            loss,
            train_f1,
            val_f1,
        });
        match &best {
            Some((_, b, _)) if val_f1 <= *b => {}
            _ => best = Some((epoch, val_f1, model.clone())),
        }
        let best_epoch = best.as_ref().map_or(0, |b| b.0);
        if epoch - best_epoch >= cfg.patience.max(1) {
            break;
        }
        let grads = tape.backward(loss_var)?;
        let g: Vec<_> = fwd
            .params
            .iter()
            .zip(&active)
            .map(|(&v, &on)| if on { grads.get(v) } else { None })
            .collect();
        let mut params = model.tensors_mut();
        opt.step(&mut params, &g, &names).map_err(|e| match e {
            HgmnError::NonFinite(_) => HgmnError::Diverged { epoch, loss },
            e => e,
        })?;
    }

    let (best_epoch, _, model) = best.expect("at least one epoch ran");
    let pred = model.predict(x)?;
    let score = |ids: &[usize], y: &[usize]| -> Result<Option<f64>> {
        if ids.is_empty() {
            Ok(None)
        } else {
            f1_on(&pred, ids, y).map(Some)
        }
    };
    let metrics = RunMetrics {
        variant: cfg.variant(),
        hypergraph_kind: cfg.hypergraph_kind,
        seed,
        epochs_run: history.len(),
        best_epoch,
        train_f1: f1_on(&pred, &split.train_ids, &train_y)?,
        val_f1: score(&split.val_ids, &val_y)?,
        test_f1: score(&split.test_ids, &test_y)?,
        history,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((model, metrics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

/// Summary over trials. `mean`, `std` (population) and `max` are taken
/// over [`RunMetrics::score`] of the successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub variant: String,
    pub hypergraph_kind: HypergraphKind,
    pub trials: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub max: Option<f64>,
    pub runs: Vec<RunMetrics>,
    pub failures: Vec<TrialFailure>,
}

impl AggregateMetrics {
    pub fn from_runs(variant: String, kind: HypergraphKind, trials: usize, runs: Vec<RunMetrics>, failures: Vec<TrialFailure>) -> Self {
        let scores: Vec<f64> = runs.iter().map(RunMetrics::score).collect();
        let (mean, std, max) = if scores.is_empty() {
            (None, None, None)
        } else {
            let n = scores.len() as f64;
            let mean = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
            let max = scores.iter().copied().fold(f64::MIN, f64::max);
            (Some(mean), Some(var.sqrt()), Some(max))
        };
        AggregateMetrics {
            variant,
            hypergraph_kind: kind,
            trials,
            failed: failures.len(),
            mean,
            std,
            max,
            runs,
            failures,
        }
    }

    /// Table label such as `HGMN (L)/residual`.
    pub fn label(&self) -> String {
        let tag = match self.hypergraph_kind {
            HypergraphKind::Link => "L",
            HypergraphKind::Degree => "D",
        };
        match self.variant.split_once('/') {
            Some((head, rest)) => format!("{head} ({tag})/{rest}"),
            None => format!("{} ({tag})", self.variant),
        }
    }

    pub fn report_row(&self) -> ReportRow {
        ReportRow {
            name: self.label(),
            mean: self.mean,
            std: self.std,
            max: self.max,
            trials: self.trials,
            failed: self.failed,
        }
    }
}

/// `trials` independent runs; trial `t` resamples the split and
/// initializes the model with seed `cfg.seed + t`. Diverged trials are
/// counted in `failed` rather than aborting the batch.
pub fn multi_trial(g: &Graph, cfg: &TrainConfig, trials: usize) -> Result<AggregateMetrics> {
    let prep = prepare(g, cfg)?;
    multi_trial_prepared(g, &prep, cfg, trials)
}

pub fn multi_trial_prepared(g: &Graph, prep: &Prepared, cfg: &TrainConfig, trials: usize) -> Result<AggregateMetrics> {
    multi_trial_best(g, prep, cfg, trials).map(|(agg, _)| agg)
}

/// Model of the highest-scoring trial (earliest on ties).
#[derive(Debug, Clone)]
pub struct BestTrial {
    pub trial: usize,
    pub seed: u64,
    pub split: SplitSpec,
    pub model: HgmnModel,
}

/// Like [`multi_trial_prepared`], also returning the best trial's model.
pub fn multi_trial_best(
    g: &Graph,
    prep: &Prepared,
    cfg: &TrainConfig,
    trials: usize,
) -> Result<(AggregateMetrics, Option<BestTrial>)> {
    if trials == 0 {
        return Err(HgmnError::Config("trials must be >= 1".into()));
    }
    cfg.validate()?;
    let outcomes = parallel::map_range(trials, |t| {
        let seed = cfg.seed.wrapping_add(t as u64);
        let split = sample_split(g, &cfg.split_config(seed))?;
        train_prepared(g, prep, &split, cfg, seed).map(|(model, m)| (split, model, m))
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<(f64, BestTrial)> = None;
    for (t, o) in outcomes.into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(t as u64);
        match o {
            Ok((split, model, m)) => {
                if best.as_ref().is_none_or(|(s, _)| m.score() > *s) {
                    best = Some((
                        m.score(),
                        BestTrial {
                            trial: t,
                            seed,
                            split,
                            model,
                        },
                    ));
                }
                runs.push(m);
            }
            Err(e @ (HgmnError::Diverged { .. } | HgmnError::NonFinite(_))) => {
                log::warn!("trial {t} failed: {e}");
                failures.push(TrialFailure {
                    trial: t,
                    seed,
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let agg = AggregateMetrics::from_runs(cfg.variant(), cfg.hypergraph_kind, trials, runs, failures);
    Ok((agg, best.map(|(_, b)| b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Lr,
    LambdaReg,
    HiddenDim,
    NumLayers,
}

impl std::str::FromStr for SweepParam {
    type Err = HgmnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(SweepParam::Lr),
            "lambda_reg" | "lambda" => Ok(SweepParam::LambdaReg),
            "hidden_dim" | "F_h" | "f_h" => Ok(SweepParam::HiddenDim),
            "num_layers" => Ok(SweepParam::NumLayers),
            other => Err(HgmnError::Config(format!(
                "unknown sweep parameter `{other}` (expected lr, lambda_reg, F_h or num_layers)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::Lr => "lr",
            SweepParam::LambdaReg => "lambda_reg",
            SweepParam::HiddenDim => "F_h",
            SweepParam::NumLayers => "num_layers",
        })
    }
}

impl SweepParam {
    /// Copy of `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &TrainConfig, value: f64) -> Result<TrainConfig> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(HgmnError::Config(format!("{self} needs a non-negative integer, got {value}")))
            }
        };
        let mut c = cfg.clone();
        match self {
            SweepParam::Lr => c.lr = value,
            SweepParam::LambdaReg => c.lambda_reg = value,
            SweepParam::HiddenDim => c.hidden_dim = count()?,
            SweepParam::NumLayers => c.num_layers = count()?,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: AggregateMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Columns: `param,value,trials,failed,mean,std,max`; scores as fractions.
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        let mut s = String::from("param,value,trials,failed,mean,std,max\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                self.param,
                r.value,
                m.trials,
                m.failed,
                opt(m.mean),
                opt(m.std),
                opt(m.max)
            );
        }
        s
    }
}

/// One multi-trial run per value of `param`.
pub fn sweep(g: &Graph, cfg: &TrainConfig, param: SweepParam, values: &[f64], trials: usize) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(HgmnError::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<TrainConfig> = values.iter().map(|&v| param.apply(cfg, v)).collect::<Result<_>>()?;
    let prep = prepare(g, cfg)?;
    let rows = values
        .iter()
        .zip(&configs)
        .map(|(&value, c)| {
            Ok(SweepRow {
                value,
                metrics: multi_trial_prepared(g, &prep, c, trials)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable { param, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Graph {
        let e = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)];
        Graph::from_edges(6, &e)
            .unwrap()
            .with_labels((0..6).map(|v| Some(usize::from(v >= 3))).collect(), 2)
            .unwrap()
    }

    fn toy_config() -> TrainConfig {
        TrainConfig {
            adjacency: WalkConfig {
                dim: 16,
                walk_len: 20,
                walks_per_node: 10,
                window: 3,
                ..WalkConfig::default()
            },
            hidden_dim: 16,
            state_dim: 4,
            max_epochs: 200,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn overfits_toy_with_both_kinds() {
        for kind in [HypergraphKind::Link, HypergraphKind::Degree] {
            let cfg = TrainConfig {
                hypergraph_kind: kind,
                ..toy_config()
            };
            let (_, m) = train(&toy(), &SplitSpec::all((0..6).collect()), &cfg).unwrap();
            assert_eq!(m.train_f1, 1.0, "{kind}: {:?}", m.history.last());
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let split = SplitSpec::all((0..6).collect());
        let (a, ma) = train(&toy(), &split, &toy_config()).unwrap();
        let (b, mb) = train(&toy(), &split, &toy_config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&ma).unwrap(), serde_json::to_string(&mb).unwrap());
    }

    #[test]
    fn best_trial_matches_its_run() {
        let g = toy();
        let cfg = TrainConfig {
            test_fraction: 0.34,
            val_fraction: 0.0,
            max_epochs: 30,
            ..toy_config()
        };
        let prep = prepare(&g, &cfg).unwrap();
        let (agg, best) = multi_trial_best(&g, &prep, &cfg, 3).unwrap();
        let best = best.unwrap();
        assert_eq!(agg.max, Some(agg.runs[best.trial].score()));
        assert!(agg.runs[..best.trial].iter().all(|r| r.score() < agg.max.unwrap()));
        let (model, _) = train_prepared(&g, &prep, &best.split, &cfg, best.seed).unwrap();
        assert_eq!(model.tensors(), best.model.tensors());
    }

    #[test]
    fn variant_names() {
        let c = TrainConfig::default();
        assert_eq!(c.variant(), "HGMN");
        assert_eq!(TrainConfig { disable_residual: true, ..c.clone() }.variant(), "HGMN/residual");
        assert_eq!(TrainConfig { disable_mamba: true, ..c.clone() }.variant(), "HGMN/mamba");
        let agg = AggregateMetrics::from_runs("HGMN/residual".into(), HypergraphKind::Degree, 1, vec![], vec![]);
        assert_eq!(agg.label(), "HGMN (D)/residual");
    }

    #[test]
    fn aggregate_statistics() {
        let run = |s: f64| RunMetrics {
            variant: "HGMN".into(),
            hypergraph_kind: HypergraphKind::Link,
            seed: 0,
            epochs_run: 1,
            best_epoch: 0,
            train_f1: 1.0,
            val_f1: None,
            test_f1: Some(s),
            history: vec![],
            wall_time_secs: 0.0,
        };
        let a = AggregateMetrics::from_runs("HGMN".into(), HypergraphKind::Link, 3, vec![run(0.5), run(0.7), run(0.9)], vec![]);
        assert!((a.mean.unwrap() - 0.7).abs() < 1e-12);
        assert!((a.std.unwrap() - (0.08f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(a.max, Some(0.9));
        let empty = AggregateMetrics::from_runs("HGMN".into(), HypergraphKind::Link, 2, vec![], vec![]);
        assert_eq!((empty.mean, empty.std, empty.max), (None, None, None));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { lr: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { max_epochs: 0, ..TrainConfig::default() }.validate().is_err());
        let both = TrainConfig {
            disable_mamba: true,
            features: FeatureSet::RoleOnly,
            ..TrainConfig::default()
        };
        assert!(both.validate().is_err());
        let err = serde_json::from_str::<TrainConfig>(r#"{"learning_rate": 0.1}"#).unwrap_err();
        assert!(err.to_string().contains("learning_rate"));
    }

    #[test]
    fn sweep_param_parsing() {
        assert_eq!("F_h".parse::<SweepParam>().unwrap(), SweepParam::HiddenDim);
        assert!("dropout".parse::<SweepParam>().is_err());
        assert!(SweepParam::NumLayers.apply(&TrainConfig::default(), 1.5).is_err());
        assert_eq!(SweepParam::NumLayers.apply(&TrainConfig::default(), 3.0).unwrap().num_layers, 3);
    }

    #[test]
    fn standardized_columns() {
        let m = standardize(ndarray::array![[1.0, 5.0], [3.0, 5.0]]);
        assert_eq!(m, ndarray::array![[-1.0, 0.0], [1.0, 0.0]]);
    }
}
