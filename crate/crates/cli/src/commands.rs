use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hgmn::embeddings::{adjacency_embeddings_report, role_embeddings, save_embeddings, WalkConfig, WaveletConfig};
use hgmn::eval::{micro_f1, pct, render_report, Baseline};
use hgmn::graph::sample_split;
use hgmn::hypergraph::{self, IncidenceHeader, LinkOptions};
use hgmn::nn::{Checkpoint, HgmnModel};
use hgmn::trainer::{self, multi_trial_best, prepare, AggregateMetrics, FeatureSet, SweepParam, SweepTable, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::manifest::{create_dir, write_file, Manifest, MANIFEST_FILE};
use crate::{Ablation, BuildArgs, EmbedArgs, EvaluateArgs, ReportArgs, RunArgs, SplitArg, SweepArgs, TrainArgs, UsageError};

const REMAP_FILE: &str = "remap.tsv";

/// `metrics.json`: aggregate metrics tagged with their manifest.
#[derive(Debug, Serialize, Deserialize)]
struct MetricsFile {
    manifest: String,
    #[serde(flatten)]
    metrics: AggregateMetrics,
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepFile {
    manifest: String,
    #[serde(flatten)]
    table: SweepTable,
}

#[derive(Debug, Serialize)]
struct IncidenceFile {
    manifest: String,
    #[serde(flatten)]
    header: IncidenceHeader,
    include_center: bool,
    /// Node degree -> node count.
    node_degree_histogram: BTreeMap<usize, usize>,
    /// Hyperedge size -> hyperedge count.
    edge_size_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Serialize)]
struct EvaluationFile {
    manifest: String,
    checkpoint: PathBuf,
    split: String,
    split_seed: u64,
    nodes: usize,
    micro_f1: f64,
}

fn write_remap(ds: &Dataset, dir: &Path, outputs: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(r) = &ds.remap {
        let path = dir.join(REMAP_FILE);
        r.write_sidecar(&path)?;
        outputs.push(path);
    }
    Ok(())
}

fn histogram_line(h: &BTreeMap<usize, usize>) -> String {
    h.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ")
}

pub fn build_hypergraph(a: &BuildArgs, argv: &[String]) -> Result<()> {
    let ds = data::load(&a.data, false)?;
    let include_center = !a.exclude_center;
    let h = hypergraph::build_hypergraph(&ds.graph, a.kind.into(), LinkOptions { include_center })?;
    create_dir(&a.out)?;
    let config = serde_json::json!({ "kind": h.kind(), "include_center": include_center });
    let mut m = Manifest::new("build-hypergraph", argv, ds.fingerprint.clone(), None, config);

    let mut node_hist = BTreeMap::new();
    for &d in h.node_degrees() {
        *node_hist.entry(d.round() as usize).or_insert(0) += 1;
    }
    let header = IncidenceFile {
        manifest: MANIFEST_FILE.into(),
        header: h.header(),
        include_center,
        node_degree_histogram: node_hist,
        edge_size_histogram: h.edge_size_histogram(),
    };
    let coo = a.out.join("incidence.coo");
    let json = a.out.join("incidence.json");
    write_file(&coo, &h.to_coo_text())?;
    write_file(&json, &(serde_json::to_string_pretty(&header)? + "\n"))?;
    m.outputs = vec![coo, json];
    write_remap(&ds, &a.out, &mut m.outputs)?;
    m.write(&a.out)?;

    println!("kind={} N={} N_E={} nnz={}", h.kind(), h.num_nodes(), h.num_edges(), header.header.nnz);
    println!("node degrees (degree:count): {}", histogram_line(&header.node_degree_histogram));
    println!("hyperedge sizes (size:count): {}", histogram_line(&header.edge_size_histogram));
    Ok(())
}

pub fn embed(a: &EmbedArgs, argv: &[String]) -> Result<()> {
    if !a.role && !a.adj {
        return Err(UsageError("nothing to do: pass --role and/or --adj".into()).into());
    }
    let ds = data::load(&a.data, false)?;
    let role_cfg = WaveletConfig {
        scales: a.scales.clone(),
        num_points: a.dim_points,
        t_max: a.t_max,
        chebyshev_order: a.chebyshev_order,
        ..WaveletConfig::default()
    };
    let walk_cfg = WalkConfig {
        p: a.p,
        q: a.q,
        walk_len: a.walk_len,
        walks_per_node: a.walks_per_node,
        window: a.window,
        dim: a.adj_dim,
        negatives: a.negatives,
        epochs: a.epochs,
        seed: a.seed,
        ..WalkConfig::default()
    };
    create_dir(&a.out)?;
    let mut config = serde_json::Map::new();
    let mut outputs = Vec::new();
    if a.role {
        let e = role_embeddings(&ds.graph, &role_cfg)?;
        let path = a.out.join("role.emb");
        save_embeddings(&e, &path)?;
        println!("{}: {} x {}", path.display(), e.num_nodes(), e.dim());
        config.insert("role".into(), serde_json::to_value(&role_cfg)?);
        outputs.push(path);
    }
    if a.adj {
        let r = adjacency_embeddings_report(&ds.graph, &walk_cfg)?;
        if r.isolated_nodes > 0 {
            log::warn!(
                "{} node(s) have no neighbors; their adjacency rows are initialization only",
                r.isolated_nodes
            );
        }
        let path = a.out.join("adjacency.emb");
        save_embeddings(&r.embeddings, &path)?;
        println!("{}: {} x {}", path.display(), r.embeddings.num_nodes(), r.embeddings.dim());
        config.insert("adjacency".into(), serde_json::to_value(&walk_cfg)?);
        outputs.push(path);
    }
    let seed = a.adj.then_some(a.seed);
    let mut m = Manifest::new("embed", argv, ds.fingerprint.clone(), seed, config.into());
    m.outputs = outputs;
    write_remap(&ds, &a.out, &mut m.outputs)?;
    m.write(&a.out)
}

fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
}

fn run_config(r: &RunArgs) -> Result<TrainConfig> {
    let mut cfg = match &r.config {
        Some(p) => load_config(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = r.seed {
        cfg.seed = s;
    }
    if let Some(k) = r.kind {
        cfg.hypergraph_kind = k.into();
    }
    if let Some(lr) = r.lr {
        cfg.lr = lr;
    }
    if let Some(e) = r.max_epochs {
        cfg.max_epochs = e;
    }
    if let Some(p) = &r.role_emb {
        cfg.role_path = Some(p.clone());
    }
    if let Some(p) = &r.adj_emb {
        cfg.adjacency_path = Some(p.clone());
    }
    for ab in &r.ablate {
        match ab {
            Ablation::Residual => cfg.disable_residual = true,
            Ablation::Mamba => cfg.disable_mamba = true,
            Ablation::Role => cfg.features = FeatureSet::RoleOnly,
            Ablation::Adjacency => cfg.features = FeatureSet::AdjacencyOnly,
        }
    }
    if r.ablate.contains(&Ablation::Role) && r.ablate.contains(&Ablation::Adjacency) {
        return Err(UsageError("--ablate role and --ablate adjacency leave no input features".into()).into());
    }
    if r.trials == 0 {
        return Err(UsageError("--trials must be at least 1".into()).into());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary(agg: &AggregateMetrics) -> String {
    let fmt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}", pct(v)));
    format!(
        "{}: micro-F1 {} ± {} (max {}) over {}/{} trials",
        agg.label(),
        fmt(agg.mean),
        fmt(agg.std),
        fmt(agg.max),
        agg.trials - agg.failed,
        agg.trials
    )
}

pub fn train(a: &TrainArgs, argv: &[String]) -> Result<()> {
    if let Some(spec) = &a.sweep {
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--sweep expects PARAM=V1,V2,..., got `{spec}`")))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| UsageError(format!("--sweep value `{v}` is not a number")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        return run_sweep(&a.run, name, &values, argv, "train");
    }
    let r = &a.run;
    let cfg = run_config(r)?;
    let ds = data::load(&r.data, true)?;
    create_dir(&r.out)?;
    let prep = prepare(&ds.graph, &cfg)?;
    let (agg, best) = multi_trial_best(&ds.graph, &prep, &cfg, r.trials)?;

    let mut m = Manifest::new("train", argv, ds.fingerprint.clone(), Some(cfg.seed), serde_json::to_value(&cfg)?);
    m.details = serde_json::json!({
        "variant": agg.variant,
        "trials": r.trials,
        "best_trial": best.as_ref().map(|b| b.trial),
        "best_seed": best.as_ref().map(|b| b.seed),
    });
    let metrics_json = r.out.join("metrics.json");
    let metrics_csv = r.out.join("metrics.csv");
    let checkpoint = r.out.join("checkpoint.json");
    m.outputs = vec![metrics_json.clone(), metrics_csv.clone()];
    if best.is_some() {
        m.outputs.push(checkpoint.clone());
    }
    write_remap(&ds, &r.out, &mut m.outputs)?;

    let report = render_report(&[agg.report_row()], None)?;
    let file = MetricsFile {
        manifest: MANIFEST_FILE.into(),
        metrics: agg,
    };
    write_file(&metrics_json, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    write_file(&metrics_csv, &report.csv)?;
    if let Some(b) = &best {
        b.model.save(&checkpoint, Some(m.to_json()?))?;
    }
    m.write(&r.out)?;

    println!("{}", summary(&file.metrics));
    match best {
        Some(b) => {
            println!("best trial {} (seed {}) saved to {}", b.trial, b.seed, checkpoint.display());
            Ok(())
        }
        None => anyhow::bail!("all {} trials failed; see {}", r.trials, metrics_json.display()),
    }
}

pub fn sweep(a: &SweepArgs, argv: &[String]) -> Result<()> {
    run_sweep(&a.run, &a.param, &a.values, argv, "sweep")
}

fn run_sweep(r: &RunArgs, param: &str, values: &[f64], argv: &[String], command: &str) -> Result<()> {
    let param: SweepParam = param.trim().parse()?;
    if values.is_empty() {
        return Err(UsageError("a sweep needs at least one value".into()).into());
    }
    let cfg = run_config(r)?;
    for &v in values {
        param.apply(&cfg, v)?;
    }
    let ds = data::load(&r.data, true)?;
    create_dir(&r.out)?;
    let table = trainer::sweep(&ds.graph, &cfg, param, values, r.trials)?;

    let mut m = Manifest::new(command, argv, ds.fingerprint.clone(), Some(cfg.seed), serde_json::to_value(&cfg)?);
    m.details = serde_json::json!({ "param": param, "values": values, "trials": r.trials });
    let csv = r.out.join("sweep.csv");
    let json = r.out.join("sweep.json");
    m.outputs = vec![csv.clone(), json.clone()];
    write_remap(&ds, &r.out, &mut m.outputs)?;
    write_file(&csv, &table.to_csv())?;
    let file = SweepFile {
        manifest: MANIFEST_FILE.into(),
        table,
    };
    write_file(&json, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    m.write(&r.out)?;
    for row in &file.table.rows {
        println!("{}={}  {}", param, row.value, summary(&row.metrics));
    }
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, argv: &[String]) -> Result<()> {
    let text = std::fs::read_to_string(&a.checkpoint)
        .with_context(|| format!("cannot read checkpoint {}", a.checkpoint.display()))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a checkpoint", a.checkpoint.display()))?;
    let model = HgmnModel::from_checkpoint(&ck)?;
    let origin: Option<Manifest> = match &ck.manifest {
        Some(s) => Some(serde_json::from_str(s).context("checkpoint manifest is malformed")?),
        None => None,
    };
    let cfg: TrainConfig = match (&a.config, &origin) {
        (Some(p), _) => load_config(p)?,
        (None, Some(o)) => serde_json::from_value(o.config.clone()).context("checkpoint manifest holds no training config")?,
        (None, None) => {
            return Err(UsageError("checkpoint carries no manifest; pass --config".into()).into());
        }
    };
    let split_seed = origin
        .as_ref()
        .and_then(|o| o.details.get("best_seed"))
        .and_then(serde_json::Value::as_u64)
        .unwrap_or(cfg.seed);

    let ds = data::load(&a.data, true)?;
    if let Some(o) = &origin {
        if o.dataset.sha256 != ds.fingerprint.sha256 {
            log::warn!("dataset differs from the one the checkpoint was trained on");
        }
    }
    let g = &ds.graph;
    let prep = prepare(g, &cfg)?;
    let pred = model.predict(&prep.inputs)?;
    let ids: Vec<usize> = match a.split {
        SplitArg::All => (0..g.num_nodes()).filter(|&v| g.label(v).is_some()).collect(),
        s => {
            let split = sample_split(g, &cfg.split_config(split_seed))?;
            match s {
                SplitArg::Train => split.train_ids,
                SplitArg::Val => split.val_ids,
                _ => split.test_ids,
            }
        }
    };
    let split_name = format!("{:?}", a.split).to_lowercase();
    if ids.is_empty() {
        anyhow::bail!("the {split_name} split is empty");
    }
    let p: Vec<usize> = ids.iter().map(|&v| pred[v]).collect();
    let truth: Vec<usize> = ids.iter().filter_map(|&v| g.label(v)).collect();
    let f1 = micro_f1(&p, &truth)?;
    println!("micro-F1 on {split_name} ({} nodes): {:.2}", ids.len(), pct(f1));

    if let Some(out) = &a.out {
        create_dir(out)?;
        let config = serde_json::to_value(&cfg)?;
        let mut m = Manifest::new("evaluate", argv, ds.fingerprint.clone(), Some(split_seed), config);
        let eval_path = out.join("evaluation.json");
        let pred_path = out.join("predictions.tsv");
        let file = EvaluationFile {
            manifest: MANIFEST_FILE.into(),
            checkpoint: a.checkpoint.clone(),
            split: split_name,
            split_seed,
            nodes: ids.len(),
            micro_f1: f1,
        };
        write_file(&eval_path, &(serde_json::to_string_pretty(&file)? + "\n"))?;
        let mut tsv = String::from("node\tpredicted\tlabel\n");
        for (v, p) in pred.iter().enumerate() {
            let node = ds
                .remap
                .as_ref()
                .and_then(|r| r.token(v))
                .map_or_else(|| v.to_string(), str::to_string);
            let label = g.label(v).map_or_else(String::new, |l| l.to_string());
            tsv.push_str(&format!("{node}\t{p}\t{label}\n"));
        }
        write_file(&pred_path, &tsv)?;
        m.outputs = vec![eval_path, pred_path];
        m.write(out)?;
    }
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &a.metrics {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let f: MetricsFile =
            serde_json::from_str(&text).with_context(|| format!("{} is not a metrics file", path.display()))?;
        rows.push(f.metrics.report_row());
    }
    let baselines = a
        .baselines
        .iter()
        .map(|b| {
            let (name, score) = b
                .split_once('=')
                .ok_or_else(|| UsageError(format!("--baseline expects NAME=SCORE, got `{b}`")))?;
            let score = score
                .trim()
                .parse()
                .map_err(|_| UsageError(format!("baseline score `{score}` is not a number")))?;
            Ok(Baseline {
                name: name.trim().to_string(),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = render_report(&rows, (!baselines.is_empty()).then_some(baselines.as_slice()))?;
    print!("{}", report.text);
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_file(&out.join("report.csv"), &report.csv)?;
        write_file(&out.join("report.txt"), &report.text)?;
    }
    Ok(())
}
