//! Adam optimizer with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Per-parameter moment accumulators, aligned with the model's block
/// order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zeroed state shaped like the given blocks.
    pub fn new(block_lens: impl IntoIterator<Item = usize>) -> Self {
        let m: Vec<Vec<f64>> = block_lens.into_iter().map(|l| vec![0.0; l]).collect();
        let v = m.clone();
        AdamState {
            m,
            v,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// First and second moments of one block (read-only, for tests).
    pub fn moments(&self, block: usize) -> (&[f64], &[f64]) {
        (&self.m[block], &self.v[block])
    }

    /// One update: `θ -= lr · m̂ / (√v̂ + ε)` with
    /// `m̂ = m/(1−β1^t)`, `v̂ = v/(1−β2^t)`.
    pub fn step(
        &mut self,
        params: &mut [(String, &mut [f64])],
        grads: &[(String, &[f64])],
        lr: f64,
    ) -> Result<(), ModelError> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "{} param blocks, {} grad blocks, optimizer has {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (b, ((_, theta), (_, g))) in params.iter_mut().zip(grads).enumerate() {
            if theta.len() != g.len() || theta.len() != self.m[b].len() {
                return Err(ModelError::ShapeMismatch(format!(
                    "block {b}: param {} / grad {} / state {}",
                    theta.len(),
                    g.len(),
                    self.m[b].len()
                )));
            }
            for i in 0..theta.len() {
                self.m[b][i] = self.beta1 * self.m[b][i] + (1.0 - self.beta1) * g[i];
                self.v[b][i] = self.beta2 * self.v[b][i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = self.m[b][i] / bc1;
                let v_hat = self.v[b][i] / bc2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
