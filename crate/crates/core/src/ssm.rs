//! Diagonal linear state-space block with zero-order-hold discretization.
//!
//! Each of the F channels is an independent single-input single-output
//! system with an `n`-dimensional diagonal state:
//!
//! ```text
//! h'(t) = A h(t) + B x(t),   y(t) = C h(t)
//! Ā = exp(Δ A),   B̄ = (Δ A)⁻¹ (exp(Δ A) − I) Δ B
//! h_t = Ā h_{t−1} + B̄ x_t,   y_t = C h_t,   h_0 = 0
//! ```

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{HgmnError, Result};

/// Below this `|Δ A|` the ZOH input gain uses its limit `B̄ = Δ B`.
pub const ZOH_LIMIT: f64 = 1e-8;

/// `(exp(z) − 1) / z`, with value 1 at `z = 0`.
pub fn phi(z: f64) -> f64 {
    if z.abs() < ZOH_LIMIT {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// Derivative of [`phi`].
pub fn phi_prime(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        // 1/2 + z/3 + z²/8 + z³/30
        0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z / 30.0))
    } else {
        (z * z.exp() - z.exp_m1()) / (z * z)
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ZOH discretization of one diagonal state entry: returns `(Ā, B̄)`.
pub fn discretize_scalar(a: f64, b: f64, delta: f64) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite() && delta.is_finite()) {
        return Err(HgmnError::NonFinite(format!("SSM parameters (A = {a}, B = {b}, Δ = {delta})")));
    }
    if delta <= 0.0 {
        return Err(HgmnError::Config(format!("step size Δ = {delta} must be > 0")));
    }
    let z = delta * a;
    Ok((z.exp(), delta * phi(z) * b))
}

/// Continuous parameters of an F-channel, n-state diagonal SSM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsmParams {
    /// F × n diagonal entries of A.
    pub a: Array2<f64>,
    /// F × n input gains.
    pub b: Array2<f64>,
    /// F × n output gains.
    pub c: Array2<f64>,
    /// Per-channel step size, all > 0.
    pub delta: Array1<f64>,
}

impl SsmParams {
    /// Standard stable initialization: `A[f, j] = −(j + 1)`, unit `B`, `C`
    /// and a shared step size.
    pub fn stable_init(channels: usize, state_dim: usize, delta: f64) -> Self {
        SsmParams {
            a: Array2::from_shape_fn((channels, state_dim), |(_, j)| -((j + 1) as f64)),
            b: Array2::ones((channels, state_dim)),
            c: Array2::ones((channels, state_dim)),
            delta: Array1::from_elem(channels, delta),
        }
    }

    pub fn channels(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.a.ncols()
    }

    fn check(&self) -> Result<()> {
        let shape = self.a.dim();
        if self.b.dim() != shape || self.c.dim() != shape || self.delta.len() != shape.0 {
            return Err(HgmnError::shape(
                "ssm",
                format!(
                    "A {:?}, B {:?}, C {:?}, Δ {}",
                    shape,
                    self.b.dim(),
                    self.c.dim(),
                    self.delta.len()
                ),
            ));
        }
        Ok(())
    }
}

/// Discretized parameters `(Ā, B̄)`, both F × n.
pub fn discretize(p: &SsmParams) -> Result<(Array2<f64>, Array2<f64>)> {
    p.check()?;
    let mut a_bar = Array2::zeros(p.a.dim());
    let mut b_bar = Array2::zeros(p.a.dim());
    for ((f, j), &a) in p.a.indexed_iter() {
        let (ab, bb) = discretize_scalar(a, p.b[[f, j]], p.delta[f])?;
        a_bar[[f, j]] = ab;
        b_bar[[f, j]] = bb;
    }
    Ok((a_bar, b_bar))
}

/// Runs the recurrence over a sequence of F-dimensional inputs.
pub fn scan(p: &SsmParams, xs: &[Array1<f64>]) -> Result<Vec<Array1<f64>>> {
    if xs.is_empty() {
        return Err(HgmnError::Config("scan needs at least one input step".into()));
    }
    let (a_bar, b_bar) = discretize(p)?;
    let (f, n) = p.a.dim();
    let mut h = Array2::<f64>::zeros((f, n));
    let mut ys = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        if x.len() != f {
            return Err(HgmnError::shape(
                "scan",
                format!("step {t} has {} inputs, the system has {f} channels", x.len()),
            ));
        }
        let mut y = Array1::zeros(f);
        for ch in 0..f {
            let mut acc = 0.0;
            for j in 0..n {
                let hj = a_bar[[ch, j]] * h[[ch, j]] + b_bar[[ch, j]] * x[ch];
                h[[ch, j]] = hj;
                acc += p.c[[ch, j]] * hj;
            }
            y[ch] = acc;
        }
        ys.push(y);
    }
    Ok(ys)
}
