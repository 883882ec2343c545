//! Tape gradients against central finite differences.

use std::sync::Arc;

use hgmn::graph::Graph;
use hgmn::hypergraph::{build_hypergraph, propagation_operator, HypergraphKind, LinkOptions, Normalization};
use hgmn::nn::{FusionMode, HgmnModel, ModelConfig, ModelInputs, ResidualInput, Tape, TokenOrder};
use ndarray::Array2;

fn inputs(kind: HypergraphKind, norm: Normalization) -> ModelInputs {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
    let h = build_hypergraph(&g, kind, LinkOptions::default()).unwrap();
    let p = Arc::new(propagation_operator(&h, norm).unwrap());
    let role = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 7 + j * 3) as f64 * 0.41).sin());
    let adj = Array2::from_shape_fn((6, 2), |(i, j)| ((i * 5 + j) as f64 * 0.29).cos());
    ModelInputs::new(role, adj, p).unwrap()
}

fn loss_value(model: &HgmnModel, x: &ModelInputs, targets: &Arc<[(usize, usize)]>, lambda: f64) -> f64 {
    let mut t = Tape::new();
    let f = model.forward(&mut t, x).unwrap();
    let l = model.loss(&mut t, &f, targets.clone(), lambda).unwrap();
    t.scalar(l)
}

fn check(cfg: ModelConfig, x: &ModelInputs, lambda: f64) {
    let mut model = HgmnModel::init(cfg, 11).unwrap();
    // Move C and the gate head away from their small defaults so every
    // path carries signal.
    model.fusion.ssm.c.mapv_inplace(|v| v * 5.0 + 0.3);
    model.fusion.ssm.b.mapv_inplace(|v| v * 3.0);
    let targets: Arc<[(usize, usize)]> = vec![(0, 0), (1, 0), (4, 1), (5, 1)].into();

    let mut t = Tape::new();
    let f = model.forward(&mut t, x).unwrap();
    let l = model.loss(&mut t, &f, targets.clone(), lambda).unwrap();
    let grads = t.backward(l).unwrap();
    let names: Vec<String> = model.tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Option<Array2<f64>>> = f.params.iter().map(|&v| grads.get(v).cloned()).collect();

    let h = 1e-6;
    for (k, name) in names.iter().enumerate() {
        let shape = model.tensors()[k].1.dim();
        for idx in 0..shape.0 * shape.1 {
            let ij = (idx / shape.1, idx % shape.1);
            let orig = model.tensors()[k].1[ij];
            model.tensors_mut()[k][ij] = orig + h;
            let up = loss_value(&model, x, &targets, lambda);
            model.tensors_mut()[k][ij] = orig - h;
            let down = loss_value(&model, x, &targets, lambda);
            model.tensors_mut()[k][ij] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = analytic[k].as_ref().map_or(0.0, |g| g[ij]);
            let tol = 1e-5 * (1.0 + fd.abs().max(an.abs()));
            assert!((fd - an).abs() < tol, "{name}{ij:?}: analytic {an}, numeric {fd}");
        }
    }
}

fn small(fusion: FusionMode) -> ModelConfig {
    ModelConfig {
        hidden_dim: 3,
        state_dim: 2,
        fusion,
        ..ModelConfig::new(3, 2, 2)
    }
}

#[test]
fn full_model_link_hypergraph() {
    check(small(FusionMode::Ssm), &inputs(HypergraphKind::Link, Normalization::Inverse), 0.0);
}

#[test]
fn full_model_degree_hypergraph_with_regularization() {
    check(small(FusionMode::Ssm), &inputs(HypergraphKind::Degree, Normalization::InverseSqrt), 0.01);
}

#[test]
fn adjacency_first_and_projection_residual() {
    let cfg = ModelConfig {
        token_order: TokenOrder::AdjacencyFirst,
        residual_input: ResidualInput::Projection,
        num_layers: 3,
        ..small(FusionMode::Ssm)
    };
    check(cfg, &inputs(HypergraphKind::Link, Normalization::Inverse), 0.0);
}

#[test]
fn fixed_gates_and_no_residual() {
    let cfg = ModelConfig {
        residual: false,
        ..small(FusionMode::Mean)
    };
    check(cfg, &inputs(HypergraphKind::Link, Normalization::Inverse), 0.0);
}

#[test]
fn bypassed_components_get_no_gradient() {
    let x = inputs(HypergraphKind::Link, Normalization::Inverse);
    let cfg = ModelConfig {
        residual: false,
        ..small(FusionMode::Mean)
    };
    let model = HgmnModel::init(cfg, 2).unwrap();
    let mut t = Tape::new();
    let f = model.forward(&mut t, &x).unwrap();
    let l = model.loss(&mut t, &f, vec![(0, 0), (5, 1)].into(), 0.1).unwrap();
    let g = t.backward(l).unwrap();
    for ((name, _), (&v, active)) in model.tensors().iter().zip(f.params.iter().zip(model.active_mask())) {
        let zero = g.get(v).is_none_or(|a| a.iter().all(|&x| x == 0.0));
        assert_eq!(zero, !active, "{name}");
    }
}
