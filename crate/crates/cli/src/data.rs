//! Dataset loading and fingerprinting.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hgmn::graph::{load_edge_list, load_labels, EdgeListOptions, Graph, NodeRemap};
use hgmn::planetoid::load_planetoid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{DataArgs, UsageError};

/// Identifies the input files a command read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub sources: Vec<PathBuf>,
    /// SHA-256 over each source's file name and bytes, in order.
    pub sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
}

pub struct Dataset {
    pub graph: Graph,
    pub remap: Option<NodeRemap>,
    pub fingerprint: Fingerprint,
}

fn resolve(path: &Path, data_dir: Option<&Path>) -> PathBuf {
    match data_dir {
        Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

pub fn hash_files(paths: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = std::fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Loads the graph named by `args`; labels are required when `need_labels`.
pub fn load(args: &DataArgs, need_labels: bool) -> Result<Dataset> {
    let dir = args.data_dir.as_deref();
    let (graph, remap, sources) = if let Some(name) = &args.planetoid {
        let dir = dir.ok_or_else(|| UsageError("--planetoid needs --data-dir or HGMN_DATA_DIR".into()))?;
        let g = load_planetoid(dir, name)?;
        let sources = ["ally", "ty", "graph", "test.index"]
            .iter()
            .map(|s| dir.join(format!("ind.{name}.{s}")))
            .collect();
        (g, None, sources)
    } else {
        let path = args
            .graph
            .as_deref()
            .ok_or_else(|| UsageError("one of --graph or --planetoid is required".into()))?;
        let path = resolve(path, dir);
        let opts = EdgeListOptions {
            directed_hint: args.directed,
            keep_self_loops: args.keep_self_loops,
        };
        let loaded = load_edge_list(&path, &opts)?;
        let mut sources = vec![path];
        let g = match &args.labels {
            Some(l) => {
                let l = resolve(l, dir);
                let g = load_labels(&l, loaded.graph, loaded.remap.as_ref())?;
                sources.push(l);
                g
            }
            None => loaded.graph,
        };
        (g, loaded.remap, sources)
    };
    if need_labels && graph.labels().is_none() {
        return Err(UsageError("this command needs node labels (--labels or --planetoid)".into()).into());
    }
    let fingerprint = Fingerprint {
        sha256: hash_files(&sources)?,
        sources,
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        classes: graph.num_classes(),
    };
    Ok(Dataset {
        graph,
        remap,
        fingerprint,
    })
}
