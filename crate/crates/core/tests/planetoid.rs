use std::path::{Path, PathBuf};

use hgmn::planetoid::load_planetoid;
use hgmn::HgmnError;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/planetoid")
}

#[test]
fn toy_dataset_structure_and_labels() {
    let g = load_planetoid(&fixture(), "toy").unwrap();
    assert_eq!(g.num_nodes(), 8);
    assert_eq!(g.num_classes(), 3);
    let mut edges: Vec<_> = g.edges().collect();
    edges.sort();
    assert_eq!(edges, vec![(0, 1), (0, 2), (2, 3), (4, 6), (6, 7)]);
    let labels: Vec<_> = (0..8).map(|v| g.label(v)).collect();
    assert_eq!(
        labels,
        vec![Some(0), Some(1), Some(2), None, Some(0), None, Some(2), Some(1)]
    );
}

#[test]
fn missing_file_names_path() {
    let err = load_planetoid(&fixture(), "cora").unwrap_err();
    assert!(matches!(err, HgmnError::Io { .. }));
    assert!(err.to_string().contains("ind.cora.ally"), "{err}");
}

#[test]
fn graph_index_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["ally", "ty", "graph"] {
        std::fs::copy(fixture().join(format!("ind.toy.{f}")), dir.path().join(format!("ind.toy.{f}"))).unwrap();
    }
    // Shrinks the test range so node 7 no longer exists.
    std::fs::write(dir.path().join("ind.toy.test.index"), "6\n4\n5\n").unwrap();
    let err = load_planetoid(dir.path(), "toy").unwrap_err();
    assert!(matches!(err, HgmnError::NodeOutOfRange { .. }), "{err}");
}

/// Real datasets, when present under `HGMN_DATA_DIR`.
#[test]
fn citation_datasets_when_available() {
    let Ok(dir) = std::env::var("HGMN_DATA_DIR") else {
        return;
    };
    for (name, n, m) in [("cora", 2708, 7), ("citeseer", 3327, 6), ("pubmed", 19717, 3)] {
        let dir = Path::new(&dir);
        if !dir.join(format!("ind.{name}.graph")).exists() {
            continue;
        }
        let g = load_planetoid(dir, name).unwrap();
        assert_eq!((g.num_nodes(), g.num_classes()), (n, m), "{name}");
    }
}
