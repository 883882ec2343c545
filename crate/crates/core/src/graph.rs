//! Immutable undirected graphs in CSR form, edge-list and label loaders,
//! and seeded train/validation/test sampling.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HgmnError, Result};

/// Undirected simple graph with optional node labels.
///
/// Neighbor lists are sorted, deduplicated and symmetric. Self-loops are
/// absent unless the graph was loaded with `keep_self_loops`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    labels: Option<Vec<Option<usize>>>,
    num_classes: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes from an unordered edge list. Edges are
    /// symmetrized and deduplicated; self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_edges_with(n, edges, false)
    }

    pub fn from_edges_with(n: usize, edges: &[(usize, usize)], keep_self_loops: bool) -> Result<Self> {
        if n == 0 {
            return Err(HgmnError::EmptyGraph("graph has no nodes".into()));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(HgmnError::NodeOutOfRange { id, n });
                }
            }
            if u == v {
                if keep_self_loops {
                    adj[u].push(u);
                }
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for mut row in adj {
            row.sort_unstable();
            row.dedup();
            col_indices.extend(row);
            row_offsets.push(col_indices.len());
        }
        Ok(Graph {
            row_offsets,
            col_indices,
            labels: None,
            num_classes: 0,
        })
    }

    /// Attaches labels. Every present label must lie in `[0, num_classes)`.
    pub fn with_labels(mut self, labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if labels.len() != self.num_nodes() {
            return Err(HgmnError::InvalidLabels(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes()
            )));
        }
        if let Some((v, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(v, l)| l.filter(|&c| c >= num_classes).map(|c| (v, c)))
        {
            return Err(HgmnError::InvalidLabels(format!(
                "node {v} has label {c}, outside [0, {num_classes})"
            )));
        }
        self.labels = Some(labels);
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.row_offsets.len() - 1
    }

    /// Number of undirected edges; a self-loop counts once.
    pub fn num_edges(&self) -> usize {
        let loops = (0..self.num_nodes())
            .filter(|&v| self.neighbors(v).binary_search(&v).is_ok())
            .count();
        (self.col_indices.len() - loops) / 2 + loops
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    /// Sorted neighbors of `v`. Panics if `v` is out of range.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        if v >= self.num_nodes() {
            return Err(HgmnError::NodeOutOfRange {
                id: v,
                n: self.num_nodes(),
            });
        }
        Ok(self.row_offsets[v + 1] - self.row_offsets[v])
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.row_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u <= v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u <= v)
                .map(move |v| (u, v))
        })
    }

    pub fn labels(&self) -> Option<&[Option<usize>]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels.as_ref().and_then(|l| l.get(v).copied().flatten())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Connected components, each a sorted node list, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            stack.push(s);
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &w in self.neighbors(u) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Serializes as an edge list (`u v` per line, `u <= v`).
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# nodes {}", self.num_nodes());
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

/// Options for [`load_edge_list`].
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EdgeListOptions {
    /// The file lists arcs; reciprocal pairs collapse into one edge either way.
    pub directed_hint: bool,
    pub keep_self_loops: bool,
}

/// Mapping between file tokens and dense node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRemap {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeRemap {
    fn new() -> Self {
        NodeRemap {
            tokens: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Two-column `token\tid` text.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (id, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(s, "{t}\t{id}");
        }
        s
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| HgmnError::io(path, e))
    }

    pub fn read_sidecar(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HgmnError::io(path, e))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (tok, id) = line.rsplit_once('\t').ok_or_else(|| HgmnError::Parse {
                path: path.into(),
                line: i + 1,
                message: "expected `token<TAB>id`".into(),
            })?;
            let id: usize = id.trim().parse().map_err(|_| HgmnError::Parse {
                path: path.into(),
                line: i + 1,
                message: format!("bad id {id:?}"),
            })?;
            pairs.push((id, tok.to_owned()));
        }
        pairs.sort();
        let mut remap = NodeRemap::new();
        for (expect, (id, tok)) in pairs.into_iter().enumerate() {
            if id != expect {
                return Err(HgmnError::Parse {
                    path: path.into(),
                    line: 0,
                    message: format!("ids are not contiguous: missing {expect}"),
                });
            }
            remap.intern(&tok);
        }
        Ok(remap)
    }
}

/// Result of [`load_edge_list`]: the graph plus the token remap when the
/// file used non-integer node tokens.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub remap: Option<NodeRemap>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parses an edge list. Integer tokens are used as node ids directly (so
/// N = max id + 1 and gaps become isolated nodes); otherwise tokens are
/// remapped in order of first appearance.
pub fn parse_edge_list(text: &str, origin: &Path, opts: &EdgeListOptions) -> Result<LoadedGraph> {
    let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
    // `# nodes N` records trailing isolated nodes for integer-id files.
    let declared_nodes: Option<usize> = text
        .lines()
        .find_map(|raw| raw.trim().strip_prefix("# nodes"))
        .and_then(|rest| rest.trim().parse().ok());
    for (lineno, line) in content_lines(text) {
        let mut it = line.split_whitespace();
        let (Some(a), Some(b)) = (it.next(), it.next()) else {
            return Err(HgmnError::Parse {
                path: origin.into(),
                line: lineno,
                message: format!("expected two node tokens, got {line:?}"),
            });
        };
        if it.next().is_some() {
            return Err(HgmnError::Parse {
                path: origin.into(),
                line: lineno,
                message: format!("expected exactly two node tokens, got {line:?}"),
            });
        }
        pairs.push((lineno, a, b));
    }
    if pairs.is_empty() {
        return Err(HgmnError::EmptyGraph(format!(
            "{} contains no edges",
            origin.display()
        )));
    }
    let numeric: Option<Vec<(usize, usize)>> = pairs
        .iter()
        .map(|(_, a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
        .collect();
    let (n, edges, remap) = match numeric {
        Some(edges) => {
            let max = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
            let n = declared_nodes.unwrap_or(0).max(max + 1);
            (n, edges, None)
        }
        None => {
            let mut remap = NodeRemap::new();
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .map(|(_, a, b)| (remap.intern(a), remap.intern(b)))
                .collect();
            (remap.len(), edges, Some(remap))
        }
    };
    let graph = Graph::from_edges_with(n, &edges, opts.keep_self_loops)?;
    Ok(LoadedGraph { graph, remap })
}

pub fn load_edge_list(path: &Path, opts: &EdgeListOptions) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| HgmnError::io(path, e))?;
    parse_edge_list(&text, path, opts)
}

/// Reads `node label` lines and attaches them to `graph`.
///
/// Node tokens go through `remap` when given. Integer labels are used as
/// class ids (M = max + 1); other label tokens are numbered in sorted order.
pub fn load_labels(path: &Path, graph: Graph, remap: Option<&NodeRemap>) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| HgmnError::io(path, e))?;
    let n = graph.num_nodes();
    let mut rows: Vec<(usize, usize, &str)> = Vec::new();
    for (lineno, line) in content_lines(&text) {
        let mut it = line.split_whitespace();
        let (Some(node), Some(label)) = (it.next(), it.next()) else {
            return Err(HgmnError::Parse {
                path: path.into(),
                line: lineno,
                message: "expected `node label`".into(),
            });
        };
        let id = match remap {
            Some(r) => r.id(node),
            None => node.parse().ok(),
        }
        .ok_or_else(|| HgmnError::Parse {
            path: path.into(),
            line: lineno,
            message: format!("unknown node {node:?}"),
        })?;
        if id >= n {
            return Err(HgmnError::NodeOutOfRange { id, n });
        }
        rows.push((lineno, id, label));
    }
    let numeric: Option<Vec<usize>> = rows.iter().map(|(_, _, l)| l.parse().ok()).collect();
    let (classes, m) = match numeric {
        Some(c) => {
            let m = c.iter().max().map_or(0, |&x| x + 1);
            (c, m)
        }
        None => {
            let names: BTreeSet<&str> = rows.iter().map(|(_, _, l)| *l).collect();
            let lookup: HashMap<&str, usize> =
                names.iter().enumerate().map(|(i, &s)| (s, i)).collect();
            (rows.iter().map(|(_, _, l)| lookup[l]).collect(), names.len())
        }
    };
    let mut labels = vec![None; n];
    for ((lineno, id, _), c) in rows.iter().zip(classes) {
        if let Some(prev) = labels[*id] {
            if prev != c {
                return Err(HgmnError::Parse {
                    path: path.into(),
                    line: *lineno,
                    message: format!("node {id} labeled twice ({prev} and {c})"),
                });
            }
        }
        labels[*id] = Some(c);
    }
    graph.with_labels(labels, m)
}

pub const DEFAULT_IMBALANCE_CAP: f64 = 0.33;

/// How to draw a split.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: u64,
    /// Fraction of each class's labeled nodes held out for testing.
    pub test_fraction: f64,
    /// Fraction of the remaining pool used for validation.
    pub val_fraction: f64,
    /// Minority/majority ratio bound, e.g. 0.33 for 1:0.33. `None` disables capping.
    pub imbalance_cap: Option<f64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            seed: 0,
            test_fraction: 0.3,
            val_fraction: 0.2,
            imbalance_cap: None,
        }
    }
}

/// Disjoint train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub seed: u64,
}

impl SplitSpec {
    /// Explicit split; checks disjointness and range.
    pub fn new(n: usize, train_ids: Vec<usize>, val_ids: Vec<usize>, test_ids: Vec<usize>) -> Result<Self> {
        Self::check_ids(n, &[&train_ids, &val_ids, &test_ids], true)?;
        Ok(SplitSpec {
            train_ids,
            val_ids,
            test_ids,
            seed: 0,
        })
    }

    /// Split where the same ids serve for training, validation and testing.
    /// Used for overfitting checks on toy graphs.
    pub fn all(ids: Vec<usize>) -> Self {
        SplitSpec {
            train_ids: ids.clone(),
            val_ids: ids.clone(),
            test_ids: ids,
            seed: 0,
        }
    }

    fn check_ids(n: usize, sets: &[&Vec<usize>], disjoint: bool) -> Result<()> {
        let mut seen = vec![false; n];
        for set in sets {
            for &id in set.iter() {
                if id >= n {
                    return Err(HgmnError::NodeOutOfRange { id, n });
                }
                if disjoint && seen[id] {
                    return Err(HgmnError::Config(format!("node {id} appears in two split sets")));
                }
                seen[id] = true;
            }
        }
        Ok(())
    }
}

/// Largest per-class count allowed when the smallest class has `min` members.
fn cap_limit(min: usize, cap: f64) -> usize {
    ((min as f64) / cap + 1e-9).floor() as usize
}

fn apply_cap(by_class: &mut [Vec<usize>], cap: f64) {
    let Some(min) = by_class.iter().map(Vec::len).filter(|&c| c > 0).min() else {
        return;
    };
    let limit = cap_limit(min, cap);
    for ids in by_class.iter_mut() {
        ids.truncate(limit);
    }
}

/// Stratified, seeded split of the labeled nodes of `g`.
///
/// Each class is shuffled and divided into test, validation and train
/// parts by the configured fractions. With an imbalance cap, every emitted
/// set is downsampled so that no class exceeds `min_count / cap` members.
pub fn sample_split(g: &Graph, cfg: &SplitConfig) -> Result<SplitSpec> {
    let labels = g
        .labels()
        .ok_or_else(|| HgmnError::InvalidLabels("graph has no labels".into()))?;
    if !(0.0..1.0).contains(&cfg.test_fraction) || !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(HgmnError::Config("split fractions must lie in [0, 1)".into()));
    }
    if let Some(cap) = cfg.imbalance_cap {
        if !(cap > 0.0 && cap <= 1.0) {
            return Err(HgmnError::Config(format!("imbalance cap {cap} outside (0, 1]")));
        }
    }
    let m = g.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (v, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            by_class[*c].push(v);
        }
    }
    if let Some(class) = by_class.iter().position(Vec::is_empty) {
        return Err(HgmnError::EmptyClass { class });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train = vec![Vec::new(); m];
    let mut val = vec![Vec::new(); m];
    let mut test = vec![Vec::new(); m];
    for (c, ids) in by_class.iter_mut().enumerate() {
        ids.shuffle(&mut rng);
        let count = ids.len();
        let mut n_test = (count as f64 * cfg.test_fraction).round() as usize;
        if count >= 2 {
            n_test = n_test.min(count - 1);
        } else {
            n_test = 0;
        }
        let pool = count - n_test;
        let mut n_val = (pool as f64 * cfg.val_fraction).round() as usize;
        if pool >= 2 {
            n_val = n_val.min(pool - 1);
        } else {
            n_val = 0;
        }
        test[c] = ids[..n_test].to_vec();
        val[c] = ids[n_test..n_test + n_val].to_vec();
        train[c] = ids[n_test + n_val..].to_vec();
    }
    if let Some(cap) = cfg.imbalance_cap {
        apply_cap(&mut train, cap);
        apply_cap(&mut val, cap);
        apply_cap(&mut test, cap);
    }
    let flatten = |sets: Vec<Vec<usize>>| {
        let mut v: Vec<usize> = sets.into_iter().flatten().collect();
        v.sort_unstable();
        v
    };
    Ok(SplitSpec {
        train_ids: flatten(train),
        val_ids: flatten(val),
        test_ids: flatten(test),
        seed: cfg.seed,
    })
}
