use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hgmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgmn"))
        .args(args)
        .env_remove("HGMN_DATA_DIR")
        .output()
        .expect("spawn hgmn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(&o), stderr(&o));
    o
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two triangles joined by one edge, labeled by side, plus a small config.
struct Toy {
    dir: TempDir,
    graph: PathBuf,
    labels: PathBuf,
    config: PathBuf,
}

fn toy() -> Toy {
    let dir = TempDir::new().unwrap();
    let graph = write(dir.path(), "toy.edges", "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3\n");
    let labels = write(dir.path(), "toy.labels", "0 0\n1 0\n2 0\n3 1\n4 1\n5 1\n");
    let config = write(
        dir.path(),
        "config.json",
        r#"{
  "adjacency": {"dim": 16, "walk_len": 20, "walks_per_node": 10, "window": 3},
  "hidden_dim": 16,
  "state_dim": 4,
  "max_epochs": 200
}"#,
    );
    Toy {
        dir,
        graph,
        labels,
        config,
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn degree_hypergraph_of_path() {
    let t = TempDir::new().unwrap();
    let g = write(t.path(), "p3.edges", "0 1\n1 2\n");
    let out = t.path().join("h");
    let o = ok(hgmn(&["build-hypergraph", "--graph", s(&g), "--kind", "degree", "--out", s(&out)]));
    assert!(stdout(&o).contains("N=3 N_E=2"), "{}", stdout(&o));
    let header = json(&out.join("incidence.json"));
    assert_eq!(header["N_E"], 2);
    assert_eq!(header["manifest"], "manifest.json");
    assert_eq!(header["edge_size_histogram"]["1"], 1);
    assert_eq!(header["edge_size_histogram"]["2"], 1);
    let coo = std::fs::read_to_string(out.join("incidence.coo")).unwrap();
    assert_eq!(coo.lines().count(), 3);
}

#[test]
fn link_hypergraph_of_triangle() {
    let t = TempDir::new().unwrap();
    let g = write(t.path(), "k3.edges", "0 1\n1 2\n0 2\n");
    let out = t.path().join("h");
    let o = ok(hgmn(&["build-hypergraph", "--graph", s(&g), "--kind", "link", "--out", s(&out)]));
    assert!(stdout(&o).contains("N_E=3 nnz=9"), "{}", stdout(&o));
    let o = ok(hgmn(&["build-hypergraph", "--graph", s(&g), "--exclude-center", "--out", s(&out)]));
    assert!(stdout(&o).contains("N_E=3 nnz=6"), "{}", stdout(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["include_center"], false);
    assert_eq!(m["dataset"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_input_is_a_data_error() {
    let t = TempDir::new().unwrap();
    let missing = t.path().join("nope.edges");
    let o = hgmn(&["build-hypergraph", "--graph", s(&missing), "--out", s(t.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.edges"), "{}", stderr(&o));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(hgmn(&["build-hypergraph", "--kind", "star", "--out", "x"]).status.code(), Some(2));
    assert_eq!(hgmn(&["train"]).status.code(), Some(2));
    let t = toy();
    let o = hgmn(&["embed", "--graph", s(&t.graph), "--out", s(t.dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_subcommand_has_help() {
    let cases: [(&str, &[&str]); 6] = [
        ("build-hypergraph", &["--kind", "--include-center", "--graph", "--out"]),
        ("embed", &["--role", "--adj", "--dim-points", "--seed"]),
        ("train", &["--config", "--ablate", "--trials", "--seed", "--sweep"]),
        ("evaluate", &["--checkpoint", "--split"]),
        ("sweep", &["--param", "--values"]),
        ("report", &["--metrics", "--baseline"]),
    ];
    for (cmd, flags) in cases {
        let o = ok(hgmn(&[cmd, "--help"]));
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
        assert!(text.contains("HGMN_DATA_DIR") || cmd == "report", "{cmd} --help lacks the env var");
    }
}

#[test]
fn role_width_is_twice_the_points() {
    let t = toy();
    let out = t.dir.path().join("emb");
    ok(hgmn(&["embed", "--graph", s(&t.graph), "--role", "--dim-points", "25", "--out", s(&out)]));
    let text = std::fs::read_to_string(out.join("role.emb")).unwrap();
    assert_eq!(text.lines().next(), Some("6 50"));
}

#[test]
fn adjacency_embedding_is_reproducible() {
    let t = toy();
    let run = |name: &str| {
        let out = t.dir.path().join(name);
        ok(hgmn(&[
            "embed", "--graph", s(&t.graph), "--adj", "--seed", "7", "--adj-dim", "8", "--out", s(&out),
        ]));
        std::fs::read(out.join("adjacency.emb")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn edgeless_adjacency_warns() {
    let t = TempDir::new().unwrap();
    let g = write(t.path(), "loops.edges", "0 0\n1 1\n2 2\n");
    let out = t.path().join("emb");
    let o = ok(hgmn(&["embed", "--graph", s(&g), "--adj", "--adj-dim", "4", "--out", s(&out)]));
    assert!(stderr(&o).contains("no neighbors"), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("adjacency.emb")).unwrap();
    assert_eq!(text.lines().next(), Some("3 4"));
}

fn train_toy(t: &Toy, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = t.dir.path().join(out);
    let mut args = vec![
        "train",
        "--graph",
        s(&t.graph),
        "--labels",
        s(&t.labels),
        "--config",
        s(&t.config),
        "--out",
        s(&out),
    ];
    args.extend_from_slice(extra);
    (hgmn(&args), out)
}

#[test]
fn train_overfits_toy_and_writes_artifacts() {
    let t = toy();
    let (o, out) = train_toy(&t, "run", &["--trials", "1", "--seed", "1"]);
    ok(o);
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["variant"], "HGMN");
    assert_eq!(m["runs"][0]["train_f1"], 1.0);
    assert_eq!(m["manifest"], "manifest.json");
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config"]["hidden_dim"], 16);
    assert_eq!(manifest["details"]["best_seed"], 1);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    let ck = json(&out.join("checkpoint.json"));
    assert_eq!(ck["format"], "hgmn-checkpoint");
    assert!(ck["manifest"].as_str().unwrap().contains("\"command\": \"train\""));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("row,mean,std,max,trials,failed\nHGMN (L),"), "{csv}");

    let o = ok(hgmn(&[
        "evaluate",
        "--checkpoint",
        s(&out.join("checkpoint.json")),
        "--graph",
        s(&t.graph),
        "--labels",
        s(&t.labels),
        "--split",
        "train",
        "--out",
        s(&out.join("eval")),
    ]));
    assert!(stdout(&o).contains("micro-F1 on train"), "{}", stdout(&o));
    let e = json(&out.join("eval/evaluation.json"));
    assert_eq!(e["micro_f1"], 1.0);
    let preds = std::fs::read_to_string(out.join("eval/predictions.tsv")).unwrap();
    assert_eq!(preds.lines().count(), 7);
}

#[test]
fn training_is_reproducible() {
    let t = toy();
    let (a, out_a) = train_toy(&t, "a", &["--trials", "2", "--max-epochs", "20"]);
    let (b, out_b) = train_toy(&t, "b", &["--trials", "2", "--max-epochs", "20"]);
    ok(a);
    ok(b);
    for f in ["metrics.json", "metrics.csv", "checkpoint.json"] {
        let x = std::fs::read_to_string(out_a.join(f)).unwrap();
        let y = std::fs::read_to_string(out_b.join(f)).unwrap();
        // The manifest echoes the output directory, which differs.
        assert_eq!(x.replace(s(&out_a), ""), y.replace(s(&out_b), ""), "{f}");
    }
}

#[test]
fn ablation_is_recorded() {
    let t = toy();
    let (o, out) = train_toy(&t, "res", &["--trials", "1", "--ablate", "residual", "--max-epochs", "10"]);
    ok(o);
    assert_eq!(json(&out.join("metrics.json"))["variant"], "HGMN/residual");
    let (o, out) = train_toy(&t, "mamba", &["--trials", "1", "--ablate", "mamba", "--max-epochs", "10"]);
    ok(o);
    assert_eq!(json(&out.join("metrics.json"))["variant"], "HGMN/mamba");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let t = toy();
    let (o, out) = train_toy(&t, "sw", &["--trials", "1", "--max-epochs", "10", "--sweep", "lr=0.3,0.03,0.003"]);
    ok(o);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4, "{csv}");
    assert!(lines[1].starts_with("lr,0.3,1,"));

    let out = t.dir.path().join("sw2");
    ok(hgmn(&[
        "sweep",
        "--graph",
        s(&t.graph),
        "--labels",
        s(&t.labels),
        "--config",
        s(&t.config),
        "--trials",
        "1",
        "--max-epochs",
        "10",
        "--param",
        "F_h",
        "--values",
        "4,8",
        "--out",
        s(&out),
    ]));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn unknown_config_key_is_named() {
    let t = toy();
    let bad = write(t.dir.path(), "bad.json", r#"{"hidden_dim": 8, "learning_rat": 0.1}"#);
    let o = hgmn(&["train", "--graph", s(&t.graph), "--labels", s(&t.labels), "--config", s(&bad), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rat"), "{}", stderr(&o));

    let o = hgmn(&["train", "--graph", s(&t.graph), "--labels", s(&t.labels), "--sweep", "momentum=1", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("momentum"), "{}", stderr(&o));
}

#[test]
fn report_combines_metrics_files() {
    let t = toy();
    let (o, a) = train_toy(&t, "full", &["--trials", "2", "--max-epochs", "10"]);
    ok(o);
    let (o, b) = train_toy(&t, "abl", &["--trials", "2", "--max-epochs", "10", "--ablate", "residual"]);
    ok(o);
    let out = t.dir.path().join("report");
    let o = ok(hgmn(&[
        "report",
        "--metrics",
        s(&a.join("metrics.json")),
        s(&b.join("metrics.json")),
        "--baseline",
        "GCN=40.0",
        "--out",
        s(&out),
    ]));
    assert!(stdout(&o).contains("HGMN (L)/residual"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.contains("baseline:GCN,,,40.00,,"), "{csv}");
    assert!(csv.contains("\nAI,"), "{csv}");

    let o = hgmn(&["report", "--metrics", s(&a.join("metrics.json")), "--baseline", "GCN"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn token_ids_get_a_remap_sidecar() {
    let t = TempDir::new().unwrap();
    let g = write(t.path(), "named.edges", "alice bob\nbob carol\n");
    let out = t.path().join("h");
    ok(hgmn(&["build-hypergraph", "--graph", s(&g), "--out", s(&out)]));
    let remap = std::fs::read_to_string(out.join("remap.tsv")).unwrap();
    assert_eq!(remap, "alice\t0\nbob\t1\ncarol\t2\n");
    let m = json(&out.join("manifest.json"));
    assert!(m["outputs"].as_array().unwrap().iter().any(|p| p.as_str().unwrap().ends_with("remap.tsv")));
}

#[test]
fn data_dir_resolves_relative_paths() {
    let t = TempDir::new().unwrap();
    write(t.path(), "k3.edges", "0 1\n1 2\n0 2\n");
    let out = t.path().join("h");
    let o = Command::new(env!("CARGO_BIN_EXE_hgmn"))
        .args(["build-hypergraph", "--graph", "k3.edges", "--out", s(&out)])
        .env("HGMN_DATA_DIR", t.path())
        .output()
        .unwrap();
    let o = ok(o);
    assert!(stdout(&o).contains("N=3"));
}
