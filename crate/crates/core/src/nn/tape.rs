//! Minimal reverse-mode differentiation over dense matrices.
//!
//! Every forward operation appends a node holding its value; `backward`
//! walks the nodes in exact reverse order of creation, which is a valid
//! reverse topological order because operands always precede results.

use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};

use crate::error::{HgmnError, Result};
use crate::hypergraph::PropagationOperator;
use crate::parallel;
use crate::ssm::{phi, phi_prime, sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Propagate(Var, Arc<PropagationOperator>),
    RowSoftmax(Var),
    GateCombine { gates: Var, xr: Var, xa: Var },
    SsmScan(SsmVars),
    MaskedNll { probs: Var, targets: Arc<[(usize, usize)]>, clamp: f64 },
    SumSquares(Var),
}

/// Operands of the two-token SSM scan.
#[derive(Debug, Clone, Copy)]
pub struct SsmVars {
    /// First token per node, N × F.
    pub first: Var,
    /// Second token per node, N × F.
    pub second: Var,
    /// `A = −exp(a_log)`, F × n.
    pub a_log: Var,
    pub b: Var,
    pub c: Var,
    /// `Δ = softplus(delta_raw)`, 1 × F.
    pub delta_raw: Var,
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients indexed by [`Var`]; `None` where nothing flowed.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<f64>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn shape_str(a: &Array2<f64>) -> String {
    format!("{}x{}", a.nrows(), a.ncols())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1 × 1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.ncols() != y.nrows() {
            return Err(HgmnError::shape("matmul", format!("{} · {}", shape_str(x), shape_str(y))));
        }
        let v = x.dot(y);
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.dim() != y.dim() {
            return Err(HgmnError::shape("add", format!("{} + {}", shape_str(x), shape_str(y))));
        }
        let v = x + y;
        Ok(self.push(v, Op::Add(a, b)))
    }

    /// `x + 1 · row`, broadcasting a 1 × k row over every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (m, r) = (self.value(x), self.value(row));
        if r.nrows() != 1 || r.ncols() != m.ncols() {
            return Err(HgmnError::shape("add_row", format!("{} + {}", shape_str(m), shape_str(r))));
        }
        let v = m + r;
        Ok(self.push(v, Op::AddRow(x, row)))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x) * k;
        self.push(v, Op::Scale(x, k))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).mapv(|a| a.max(0.0));
        self.push(v, Op::Relu(x))
    }

    /// `P · x` for a fixed propagation operator.
    pub fn propagate(&mut self, op: &Arc<PropagationOperator>, x: Var) -> Result<Var> {
        let v = op.apply(self.value(x).view())?;
        Ok(self.push(v, Op::Propagate(x, Arc::clone(op))))
    }

    /// Row-wise softmax with max subtraction. A row containing `+∞` puts
    /// equal mass on its infinite entries.
    pub fn row_softmax(&mut self, x: Var) -> Var {
        let v = row_softmax(self.value(x));
        self.push(v, Op::RowSoftmax(x))
    }

    /// `out[v] = gates[v, 0] · xr[v] + gates[v, 1] · xa[v]`.
    pub fn gate_combine(&mut self, gates: Var, xr: Var, xa: Var) -> Result<Var> {
        let (g, r, a) = (self.value(gates), self.value(xr), self.value(xa));
        if g.ncols() != 2 || g.nrows() != r.nrows() || r.dim() != a.dim() {
            return Err(HgmnError::shape(
                "gate_combine",
                format!("gates {}, role {}, adjacency {}", shape_str(g), shape_str(r), shape_str(a)),
            ));
        }
        let mut v = r.clone();
        Zip::from(v.rows_mut())
            .and(g.rows())
            .and(a.rows())
            .for_each(|mut out, gr, ar| {
                Zip::from(&mut out).and(&ar).for_each(|o, &x| *o = gr[0] * *o + gr[1] * x);
            });
        Ok(self.push(v, Op::GateCombine { gates, xr, xa }))
    }

    /// Two-step diagonal SSM scan per node over the tokens `[first, second]`.
    /// Output is N × 2F: `[y_1 | y_2]`.
    pub fn ssm_scan(&mut self, vars: SsmVars) -> Result<Var> {
        let x1 = self.value(vars.first);
        let x2 = self.value(vars.second);
        let a_log = self.value(vars.a_log);
        let (f, n) = a_log.dim();
        let ok = x1.dim() == x2.dim()
            && x1.ncols() == f
            && self.value(vars.b).dim() == (f, n)
            && self.value(vars.c).dim() == (f, n)
            && self.value(vars.delta_raw).dim() == (1, f);
        if !ok {
            return Err(HgmnError::shape(
                "ssm_scan",
                format!(
                    "tokens {} / {}, a_log {}, b {}, c {}, delta {}",
                    shape_str(x1),
                    shape_str(x2),
                    shape_str(a_log),
                    shape_str(self.value(vars.b)),
                    shape_str(self.value(vars.c)),
                    shape_str(self.value(vars.delta_raw))
                ),
            ));
        }
        let disc = Discretized::new(self, &vars);
        let c = self.value(vars.c);
        let rows = x1.nrows();
        let mut out = vec![0.0; rows * 2 * f];
        parallel::for_each_row_mut(&mut out, 2 * f, |v, row| {
            for ch in 0..f {
                let (a, b) = (x1[[v, ch]], x2[[v, ch]]);
                let (mut y1, mut y2) = (0.0, 0.0);
                for j in 0..n {
                    let h1 = disc.b_bar[[ch, j]] * a;
                    let h2 = disc.a_bar[[ch, j]] * h1 + disc.b_bar[[ch, j]] * b;
                    y1 += c[[ch, j]] * h1;
                    y2 += c[[ch, j]] * h2;
                }
                row[ch] = y1;
                row[f + ch] = y2;
            }
        });
        let value = Array2::from_shape_vec((rows, 2 * f), out).expect("shape");
        Ok(self.push(value, Op::SsmScan(vars)))
    }

    /// `−Σ ln max(p[v, c], clamp)` over `(node, class)` targets; 1 × 1.
    pub fn masked_nll(&mut self, probs: Var, targets: Arc<[(usize, usize)]>, clamp: f64) -> Result<Var> {
        if targets.is_empty() {
            return Err(HgmnError::Config("loss mask is empty".into()));
        }
        let p = self.value(probs);
        let mut total = 0.0;
        for &(v, c) in targets.iter() {
            if v >= p.nrows() || c >= p.ncols() {
                return Err(HgmnError::shape("masked_nll", format!("target ({v}, {c}) outside {}", shape_str(p))));
            }
            total -= p[[v, c]].max(clamp).ln();
        }
        Ok(self.push(Array2::from_elem((1, 1), total), Op::MaskedNll { probs, targets, clamp }))
    }

    /// `Σ x²`; 1 × 1.
    pub fn sum_squares(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().map(|a| a * a).sum();
        self.push(Array2::from_elem((1, 1), s), Op::SumSquares(x))
    }

    /// Reverse pass from a 1 × 1 node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if loss.0 >= self.nodes.len() {
            return Err(HgmnError::NoForward);
        }
        if self.value(loss).dim() != (1, 1) {
            return Err(HgmnError::shape("backward", format!("loss is {}", shape_str(self.value(loss)))));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Array2::ones((1, 1)));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    accumulate(&mut grads, *a, g.dot(&self.value(*b).t()));
                    accumulate(&mut grads, *b, self.value(*a).t().dot(&g));
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::AddRow(x, row) => {
                    accumulate(&mut grads, *row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    accumulate(&mut grads, *x, g.clone());
                }
                Op::Scale(x, k) => accumulate(&mut grads, *x, &g * *k),
                Op::Relu(x) => {
                    let mut d = g.clone();
                    Zip::from(&mut d)
                        .and(self.value(*x))
                        .for_each(|d, &a| {
                            if a <= 0.0 {
                                *d = 0.0
                            }
                        });
                    accumulate(&mut grads, *x, d);
                }
                Op::Propagate(x, p) => accumulate(&mut grads, *x, p.apply_transpose(g.view())?),
                Op::RowSoftmax(x) => {
                    let y = &node.value;
                    let mut d = Array2::zeros(y.dim());
                    Zip::from(d.rows_mut())
                        .and(y.rows())
                        .and(g.rows())
                        .for_each(|mut dr, yr, gr| {
                            let dot: f64 = yr.iter().zip(gr.iter()).map(|(a, b)| a * b).sum();
                            Zip::from(&mut dr).and(&yr).and(&gr).for_each(|d, &y, &g| *d = y * (g - dot));
                        });
                    accumulate(&mut grads, *x, d);
                }
                Op::GateCombine { gates, xr, xa } => {
                    let (gv, rv, av) = (self.value(*gates), self.value(*xr), self.value(*xa));
                    let mut dg = Array2::zeros(gv.dim());
                    let mut dr = g.clone();
                    let mut da = g.clone();
                    for v in 0..gv.nrows() {
                        let gr = g.row(v);
                        dg[[v, 0]] = gr.dot(&rv.row(v));
                        dg[[v, 1]] = gr.dot(&av.row(v));
                        dr.row_mut(v).mapv_inplace(|x| x * gv[[v, 0]]);
                        da.row_mut(v).mapv_inplace(|x| x * gv[[v, 1]]);
                    }
                    accumulate(&mut grads, *gates, dg);
                    accumulate(&mut grads, *xr, dr);
                    accumulate(&mut grads, *xa, da);
                }
                Op::SsmScan(vars) => self.scan_backward(vars, &g, &mut grads),
                Op::MaskedNll { probs, targets, clamp } => {
                    let p = self.value(*probs);
                    let mut d = Array2::zeros(p.dim());
                    let scale = g[[0, 0]];
                    for &(v, c) in targets.iter() {
                        if p[[v, c]] > *clamp {
                            d[[v, c]] -= scale / p[[v, c]];
                        }
                    }
                    accumulate(&mut grads, *probs, d);
                }
                Op::SumSquares(x) => accumulate(&mut grads, *x, self.value(*x) * (2.0 * g[[0, 0]])),
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn scan_backward(&self, vars: &SsmVars, g: &Array2<f64>, grads: &mut [Option<Array2<f64>>]) {
        let x1 = self.value(vars.first);
        let x2 = self.value(vars.second);
        let c = self.value(vars.c);
        let (f, n) = c.dim();
        let rows = x1.nrows();
        let disc = Discretized::new(self, vars);

        // Per-node input gradients.
        let mut dx = vec![0.0; rows * 2 * f];
        parallel::for_each_row_mut(&mut dx, 2 * f, |v, row| {
            for ch in 0..f {
                let (gy1, gy2) = (g[[v, ch]], g[[v, f + ch]]);
                let (mut d1, mut d2) = (0.0, 0.0);
                for j in 0..n {
                    let gh2 = gy2 * c[[ch, j]];
                    let gh1 = gy1 * c[[ch, j]] + gh2 * disc.a_bar[[ch, j]];
                    d1 += gh1 * disc.b_bar[[ch, j]];
                    d2 += gh2 * disc.b_bar[[ch, j]];
                }
                row[ch] = d1;
                row[f + ch] = d2;
            }
        });
        let dx = Array2::from_shape_vec((rows, 2 * f), dx).expect("shape");
        accumulate(grads, vars.first, dx.slice(ndarray::s![.., ..f]).to_owned());
        accumulate(grads, vars.second, dx.slice(ndarray::s![.., f..]).to_owned());

        // Parameter gradients w.r.t. Ā, B̄, C, reduced over nodes in fixed order.
        let fn_ = f * n;
        let sums = parallel::sum_vectors(rows, 3 * fn_, |v, acc| {
            for ch in 0..f {
                let (a, b) = (x1[[v, ch]], x2[[v, ch]]);
                let (gy1, gy2) = (g[[v, ch]], g[[v, f + ch]]);
                for j in 0..n {
                    let k = ch * n + j;
                    let (ab, bb, cc) = (disc.a_bar[[ch, j]], disc.b_bar[[ch, j]], c[[ch, j]]);
                    let h1 = bb * a;
                    let h2 = ab * h1 + bb * b;
                    let gh2 = gy2 * cc;
                    let gh1 = gy1 * cc + gh2 * ab;
                    acc[k] += gh2 * h1;
                    acc[fn_ + k] += gh1 * a + gh2 * b;
                    acc[2 * fn_ + k] += gy1 * h1 + gy2 * h2;
                }
            }
        });
        let (g_abar, rest) = sums.split_at(fn_);
        let (g_bbar, g_c) = rest.split_at(fn_);

        let a_log = self.value(vars.a_log);
        let b = self.value(vars.b);
        let delta_raw = self.value(vars.delta_raw);
        let mut d_alog = Array2::zeros((f, n));
        let mut d_b = Array2::zeros((f, n));
        let mut d_delta = Array2::zeros((1, f));
        for ch in 0..f {
            let delta = disc.delta[ch];
            let mut g_delta = 0.0;
            for j in 0..n {
                let k = ch * n + j;
                let a = -a_log[[ch, j]].exp();
                let z = delta * a;
                let ph = phi(z);
                let gz = g_abar[k] * disc.a_bar[[ch, j]] + g_bbar[k] * delta * phi_prime(z) * b[[ch, j]];
                d_b[[ch, j]] = g_bbar[k] * delta * ph;
                g_delta += gz * a + g_bbar[k] * ph * b[[ch, j]];
                // ∂A/∂a_log = A
                d_alog[[ch, j]] = gz * delta * a;
            }
            d_delta[[0, ch]] = g_delta * sigmoid(delta_raw[[0, ch]]);
        }
        accumulate(grads, vars.a_log, d_alog);
        accumulate(grads, vars.b, d_b);
        accumulate(grads, vars.c, Array2::from_shape_vec((f, n), g_c.to_vec()).expect("shape"));
        accumulate(grads, vars.delta_raw, d_delta);
    }
}

/// ZOH discretization of the scan parameters currently on the tape.
struct Discretized {
    a_bar: Array2<f64>,
    b_bar: Array2<f64>,
    delta: Vec<f64>,
}

impl Discretized {
    fn new(tape: &Tape, vars: &SsmVars) -> Self {
        let a_log = tape.value(vars.a_log);
        let b = tape.value(vars.b);
        let delta: Vec<f64> = tape.value(vars.delta_raw).row(0).iter().map(|&r| softplus(r)).collect();
        let mut a_bar = Array2::zeros(a_log.dim());
        let mut b_bar = Array2::zeros(a_log.dim());
        for ((ch, j), &al) in a_log.indexed_iter() {
            let z = delta[ch] * -al.exp();
            a_bar[[ch, j]] = z.exp();
            b_bar[[ch, j]] = delta[ch] * phi(z) * b[[ch, j]];
        }
        Discretized { a_bar, b_bar, delta }
    }
}

fn accumulate(grads: &mut [Option<Array2<f64>>], v: Var, d: Array2<f64>) {
    match &mut grads[v.0] {
        Some(g) => *g += &d,
        slot @ None => *slot = Some(d),
    }
}

/// Row-wise softmax with max subtraction.
pub fn row_softmax(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::INFINITY {
            let k = row.iter().filter(|&&a| a == f64::INFINITY).count() as f64;
            row.mapv_inplace(|a| if a == f64::INFINITY { 1.0 / k } else { 0.0 });
            continue;
        }
        row.mapv_inplace(|a| (a - m).exp());
        let s = row.sum();
        row.mapv_inplace(|a| a / s);
    }
    out
}
