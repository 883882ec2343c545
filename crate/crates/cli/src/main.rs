//! `hgmn` command-line driver.
//!
//! Exit codes: 0 on success, 1 for data and runtime errors, 2 for usage
//! errors (bad flags, unknown config keys, invalid settings).

mod commands;
mod data;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hgmn::hypergraph::HypergraphKind;
use hgmn::HgmnError;

#[derive(Debug, Parser)]
#[command(name = "hgmn", version, about = "Hypergraph node classification with state-space fusion")]
struct Cli {
    /// Log more (repeat for debug output). `RUST_LOG` overrides this.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a node-link or node-degree hypergraph and export its incidence matrix.
    BuildHypergraph(BuildArgs),
    /// Generate role and/or adjacency embeddings.
    Embed(EmbedArgs),
    /// Train over several seeded trials; writes metrics, the best checkpoint and a manifest.
    Train(TrainArgs),
    /// Score a saved checkpoint on a dataset.
    Evaluate(EvaluateArgs),
    /// Train once per value of one hyperparameter and tabulate the results.
    Sweep(SweepArgs),
    /// Combine metrics files into a results table with improvement rows.
    Report(ReportArgs),
}

/// Where the graph comes from.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Edge list, one `u v` pair per line. Relative paths that do not
    /// exist are also tried under the data directory.
    #[arg(long, value_name = "PATH", conflicts_with = "planetoid")]
    pub graph: Option<PathBuf>,
    /// Node labels, one `node label` pair per line.
    #[arg(long, value_name = "PATH", conflicts_with = "planetoid")]
    pub labels: Option<PathBuf>,
    /// Load `ind.NAME.*` citation files from the data directory (e.g. cora).
    #[arg(long, value_name = "NAME")]
    pub planetoid: Option<String>,
    /// Default location for dataset files.
    #[arg(long, env = "HGMN_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// The edge list holds directed arcs (reciprocal pairs collapse).
    #[arg(long)]
    pub directed: bool,
    /// Keep `v v` lines instead of dropping them.
    #[arg(long)]
    pub keep_self_loops: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Link,
    Degree,
}

impl From<KindArg> for HypergraphKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Link => HypergraphKind::Link,
            KindArg::Degree => HypergraphKind::Degree,
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "link")]
    pub kind: KindArg,
    /// Put each node in its own link hyperedge (default).
    #[arg(long, overrides_with = "exclude_center")]
    pub include_center: bool,
    /// Link hyperedges hold only the neighbors.
    #[arg(long, overrides_with = "include_center")]
    pub exclude_center: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Write wavelet role embeddings (`role.emb`).
    #[arg(long)]
    pub role: bool,
    /// Write random-walk adjacency embeddings (`adjacency.emb`).
    #[arg(long)]
    pub adj: bool,
    /// Characteristic-function sample points T; role width is 2·T per scale.
    #[arg(long, default_value_t = 25)]
    pub dim_points: usize,
    /// Largest sample point.
    #[arg(long, default_value_t = 100.0)]
    pub t_max: f64,
    /// Heat scale; repeat for several. Chosen per component when omitted.
    #[arg(long = "scale", value_name = "S")]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    pub chebyshev_order: usize,
    /// Adjacency embedding width.
    #[arg(long, default_value_t = 128)]
    pub adj_dim: usize,
    #[arg(long, default_value_t = 80)]
    pub walk_len: usize,
    #[arg(long, default_value_t = 10)]
    pub walks_per_node: usize,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Return parameter.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// In-out parameter.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ablation {
    /// Drop the residual connection.
    Residual,
    /// Replace the state-space fusion by a plain average.
    Mamba,
    /// Use only role embeddings.
    Role,
    /// Use only adjacency embeddings.
    Adjacency,
}

/// Options shared by `train` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Training configuration (JSON). Unknown keys are rejected.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Disable a component; may be repeated.
    #[arg(long, value_enum)]
    pub ablate: Vec<Ablation>,
    /// Independent trials; trial t uses seed + t.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Base seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hypergraph construction (overrides the config).
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Overrides the config.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Overrides the config.
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Precomputed role embeddings (overrides the config).
    #[arg(long, value_name = "PATH")]
    pub role_emb: Option<PathBuf>,
    /// Precomputed adjacency embeddings (overrides the config).
    #[arg(long, value_name = "PATH")]
    pub adj_emb: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Sweep instead of a single configuration, e.g. `lr=0.3,0.03,0.003`.
    #[arg(long, value_name = "PARAM=V1,V2,...")]
    pub sweep: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// One of lr, lambda_reg, F_h (hidden_dim), num_layers.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
    /// Every labeled node.
    All,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`.
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// Training configuration, when the checkpoint carries no manifest.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Nodes to score. Named splits are redrawn from the trial seed.
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Also write `evaluation.json` and `predictions.tsv` here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `metrics.json` files written by `train`.
    #[arg(long = "metrics", value_name = "PATH", required = true, num_args = 1..)]
    pub metrics: Vec<PathBuf>,
    /// Published baseline score in percent, e.g. `GCN=72.26`; may be repeated.
    #[arg(long = "baseline", value_name = "NAME=SCORE")]
    pub baselines: Vec<String>,
    /// Also write `report.csv` and `report.txt` here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Bad invocation; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(e: &anyhow::Error) -> u8 {
    let usage = e.chain().any(|c| {
        c.downcast_ref::<UsageError>().is_some() || matches!(c.downcast_ref::<HgmnError>(), Some(HgmnError::Config(_)))
    });
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::BuildHypergraph(a) => commands::build_hypergraph(&a, &argv),
        Command::Embed(a) => commands::embed(&a, &argv),
        Command::Train(a) => commands::train(&a, &argv),
        Command::Evaluate(a) => commands::evaluate(&a, &argv),
        Command::Sweep(a) => commands::sweep(&a, &argv),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
