//! Loader for the public Cora/Citeseer/Pubmed citation files
//! (`ind.{name}.{ally,ty,graph,test.index}`). Node features are ignored.

pub mod pickle;

use std::path::Path;

use crate::error::{HgmnError, Result};
use crate::graph::Graph;

fn read(dir: &Path, name: &str, suffix: &str) -> Result<Vec<u8>> {
    let path = dir.join(format!("ind.{name}.{suffix}"));
    std::fs::read(&path).map_err(|e| HgmnError::io(path, e))
}

fn one_hot_rows(a: &pickle::NdArray, what: &str) -> Result<(usize, usize, Vec<Option<usize>>)> {
    let [rows, cols] = a.shape[..] else {
        return Err(HgmnError::Pickle(format!("{what} is not a matrix")));
    };
    let labels = (0..rows)
        .map(|r| {
            let row = &a.data[r * cols..(r + 1) * cols];
            let mut best: Option<usize> = None;
            for (k, &x) in row.iter().enumerate() {
                if x > 0.0 && best.is_none_or(|b| x > row[b]) {
                    best = Some(k);
                }
            }
            best
        })
        .collect();
    Ok((rows, cols, labels))
}

/// Reads graph structure and labels. Node count follows the usual
/// convention `rows(ally) + (max(test) − min(test) + 1)`; test-range ids
/// absent from the index file (Citeseer) are kept unlabeled.
pub fn load_planetoid(dir: &Path, name: &str) -> Result<Graph> {
    let ally = pickle::ndarray(&pickle::loads(&read(dir, name, "ally")?)?)?;
    let ty = pickle::ndarray(&pickle::loads(&read(dir, name, "ty")?)?)?;
    let graph = pickle::loads(&read(dir, name, "graph")?)?;
    let index_path = dir.join(format!("ind.{name}.test.index"));
    let index_text = std::fs::read_to_string(&index_path).map_err(|e| HgmnError::io(&index_path, e))?;
    let test_index: Vec<usize> = index_text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| HgmnError::Parse {
                path: index_path.clone(),
                line: i + 1,
                message: format!("expected a node index, found `{}`", l.trim()),
            })
        })
        .collect::<Result<_>>()?;

    let (train_rows, m, train_labels) = one_hot_rows(&ally, "ally")?;
    let (test_rows, m_test, test_labels) = one_hot_rows(&ty, "ty")?;
    if m_test != m {
        return Err(HgmnError::InvalidLabels(format!("ally has {m} classes, ty has {m_test}")));
    }
    if test_rows != test_index.len() {
        return Err(HgmnError::InvalidLabels(format!(
            "ty has {test_rows} rows, test index lists {} nodes",
            test_index.len()
        )));
    }
    let (lo, hi) = match (test_index.iter().min(), test_index.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(HgmnError::InvalidLabels("empty test index".into())),
    };
    let n = train_rows + (hi - lo + 1);
    let mut labels = vec![None; n];
    labels[..train_rows].copy_from_slice(&train_labels);
    for (&v, l) in test_index.iter().zip(test_labels) {
        if v >= n {
            return Err(HgmnError::NodeOutOfRange { id: v, n });
        }
        labels[v] = l;
    }

    let items = graph
        .dict_items()
        .ok_or_else(|| HgmnError::Pickle("graph file does not hold a dict".into()))?;
    let mut edges = Vec::new();
    let as_id = |x: &pickle::Value| {
        x.as_int()
            .and_then(|i| usize::try_from(i).ok())
            .ok_or_else(|| HgmnError::Pickle("non-integer node id in graph".into()))
    };
    for (k, vs) in &items {
        let u = as_id(k)?;
        for v in vs.items().ok_or_else(|| HgmnError::Pickle("adjacency entry is not a list".into()))? {
            let v = as_id(&v)?;
            if u >= n || v >= n {
                return Err(HgmnError::NodeOutOfRange { id: u.max(v), n });
            }
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges)?.with_labels(labels, m)
}
