//! Stand-alone forward operations of the model stack, evaluated without
//! keeping gradients.

use ndarray::Array2;

use super::model::{Activation, FusionBlock, HgmnModel, PROB_CLAMP};
use super::tape::{SsmVars, Tape};
use crate::error::{HgmnError, Result};
use crate::hypergraph::PropagationOperator;

/// Fused embedding and the per-node gate pair `(ŷ_r, ŷ_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fused {
    pub fused: Array2<f64>,
    pub gates: Array2<f64>,
    pub proj_role: Array2<f64>,
    pub proj_adj: Array2<f64>,
}

/// Projects both feature sets, scans `[role, adjacency]` per node and mixes
/// the projections with the softmax gates.
pub fn fuse(block: &FusionBlock, xr: &Array2<f64>, xa: &Array2<f64>) -> Result<Fused> {
    if xr.nrows() != xa.nrows() {
        return Err(HgmnError::shape(
            "fuse",
            format!("role has {} rows, adjacency has {}", xr.nrows(), xa.nrows()),
        ));
    }
    if block.proj_role.weight.ncols() != block.proj_adj.weight.ncols() {
        return Err(HgmnError::shape(
            "fuse",
            format!(
                "projection widths {} and {} differ",
                block.proj_role.weight.ncols(),
                block.proj_adj.weight.ncols()
            ),
        ));
    }
    let mut t = Tape::new();
    let leaf = |t: &mut Tape, m: &Array2<f64>| t.leaf(m.clone());
    let (r, a) = (leaf(&mut t, xr), leaf(&mut t, xa));
    let (rw, rb) = (leaf(&mut t, &block.proj_role.weight), leaf(&mut t, &block.proj_role.bias));
    let (aw, ab) = (leaf(&mut t, &block.proj_adj.weight), leaf(&mut t, &block.proj_adj.bias));
    let hr = t.matmul(r, rw)?;
    let hr = t.add_row(hr, rb)?;
    let ha = t.matmul(a, aw)?;
    let ha = t.add_row(ha, ab)?;
    let vars = SsmVars {
        first: hr,
        second: ha,
        a_log: leaf(&mut t, &block.ssm.a_log),
        b: leaf(&mut t, &block.ssm.b),
        c: leaf(&mut t, &block.ssm.c),
        delta_raw: leaf(&mut t, &block.ssm.delta_raw),
    };
    let y = t.ssm_scan(vars)?;
    let (gw, gb) = (leaf(&mut t, &block.gate.weight), leaf(&mut t, &block.gate.bias));
    let logits = t.matmul(y, gw)?;
    let logits = t.add_row(logits, gb)?;
    let gates = t.row_softmax(logits);
    let fused = t.gate_combine(gates, hr, ha)?;
    Ok(Fused {
        fused: t.value(fused).clone(),
        gates: t.value(gates).clone(),
        proj_role: t.value(hr).clone(),
        proj_adj: t.value(ha).clone(),
    })
}

/// `σ(P · x · δ)`.
pub fn conv_layer(p: &PropagationOperator, x: &Array2<f64>, delta: &Array2<f64>, act: Activation) -> Result<Array2<f64>> {
    if x.ncols() != delta.nrows() {
        return Err(HgmnError::shape(
            "conv_layer",
            format!("features {:?}, weight {:?}", x.dim(), delta.dim()),
        ));
    }
    let z = p.apply(x.view())?.dot(delta);
    Ok(match act {
        Activation::Relu => z.mapv(|v| v.max(0.0)),
        Activation::Identity => z,
    })
}

/// `J = X_1 W_res + X_last`.
pub fn residual_combine(x1: &Array2<f64>, x_last: &Array2<f64>, w_res: &Array2<f64>) -> Result<Array2<f64>> {
    if x1.ncols() != w_res.nrows() || (x1.nrows(), w_res.ncols()) != x_last.dim() {
        return Err(HgmnError::shape(
            "residual_combine",
            format!("X_1 {:?}, W_res {:?}, X_last {:?}", x1.dim(), w_res.dim(), x_last.dim()),
        ));
    }
    Ok(x1.dot(w_res) + x_last)
}

/// `softmax(J W_m + b_m)` row by row.
pub fn classify(j: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    if j.ncols() != w.nrows() || b.dim() != (1, w.ncols()) {
        return Err(HgmnError::shape(
            "classify",
            format!("J {:?}, W_m {:?}, b_m {:?}", j.dim(), w.dim(), b.dim()),
        ));
    }
    Ok(super::tape::row_softmax(&(j.dot(w) + b)))
}

/// Cross-entropy of `probs` on the masked nodes plus `lambda` times the
/// squared norm of every model tensor.
pub fn loss(probs: &Array2<f64>, labels: &[usize], mask: &[usize], model: &HgmnModel, lambda: f64) -> Result<f64> {
    if mask.is_empty() {
        return Err(HgmnError::Config("loss mask is empty".into()));
    }
    let mut total = 0.0;
    for &v in mask {
        let c = *labels
            .get(v)
            .ok_or_else(|| HgmnError::shape("loss", format!("node {v} has no label")))?;
        if v >= probs.nrows() || c >= probs.ncols() {
            return Err(HgmnError::shape("loss", format!("target ({v}, {c}) outside {:?}", probs.dim())));
        }
        total -= probs[[v, c]].max(PROB_CLAMP).ln();
    }
    if lambda != 0.0 {
        let sq: f64 = model.tensors().iter().flat_map(|(_, t)| t.iter()).map(|x| x * x).sum();
        total += lambda * sq;
    }
    Ok(total)
}
