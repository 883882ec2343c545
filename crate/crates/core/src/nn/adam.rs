//! Adam with L2 weight decay added to the gradient.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HgmnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One update. `grads[i] == None` leaves `params[i]` and its moments
    /// untouched. Non-finite gradients are rejected before anything moves.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Option<&Array2<f64>>], names: &[String]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(HgmnError::shape(
                "adam",
                format!("{} parameters, {} gradients", params.len(), grads.len()),
            ));
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
            self.v = self.m.clone();
        }
        for (i, g) in grads.iter().enumerate() {
            if let Some(g) = g {
                if g.raw_dim() != params[i].raw_dim() {
                    return Err(HgmnError::shape("adam", format!("gradient {i} has shape {:?}", g.dim())));
                }
                if g.iter().any(|x| !x.is_finite()) {
                    let name = names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
                    return Err(HgmnError::NonFinite(format!("gradient of {name}")));
                }
            }
        }
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t);
        let bc2 = 1.0 - c.beta2.powi(self.t);
        for (i, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let p = &mut *params[i];
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            ndarray::Zip::from(&mut *p)
                .and(*g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    let g = g + c.weight_decay * *p;
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    *p -= c.lr * (*m / bc1) / ((*v / bc2).sqrt() + c.eps);
                });
        }
        Ok(())
    }
}
