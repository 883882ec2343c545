//! Compares a single-thread rayon pool against the default pool on the
//! data-parallel kernels. Built without the `parallel` feature, both arms
//! run the sequential fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hgmn::embeddings::{role_embeddings, WaveletConfig};
use hgmn::graph::Graph;
use hgmn::hypergraph::{build_link_hypergraph, propagation_operator, LinkOptions, Normalization};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, avg_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (n as f64 * avg_degree / 2.0) as usize;
    let edges: Vec<(usize, usize)> = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .filter(|(u, v)| u != v)
        .collect();
    Graph::from_edges(n, &edges).unwrap()
}

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let threads = default.current_num_threads();
    vec![
        ("sequential".into(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        (format!("parallel-{threads}"), default),
    ]
}

fn propagate(c: &mut Criterion) {
    let g = random_graph(5000, 8.0, 1);
    let h = build_link_hypergraph(&g, LinkOptions::default()).unwrap();
    let p = propagation_operator(&h, Normalization::Inverse).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Array2::from_shape_simple_fn((5000, 64), || rng.random::<f64>());
    let mut group = c.benchmark_group("propagate_5000x64");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| black_box(p.apply(x.view()).unwrap())))
        });
    }
    group.finish();
}

fn wavelets(c: &mut Criterion) {
    let g = random_graph(1000, 6.0, 3);
    let cfg = WaveletConfig::default();
    let mut group = c.benchmark_group("role_embeddings_1000");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| black_box(role_embeddings(&g, &cfg).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, propagate, wavelets);
criterion_main!(benches);
