//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 2.77e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            ..AdamParams::default()
        }
    }
}

/// Per-parameter moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize, params: AdamParams) -> Self {
        AdamState {
            params,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update: `w -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, weights: &mut [f64], grads: &[f64]) -> Result<()> {
        if weights.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "adam state holds {} parameters, got weights {} / grads {}",
                self.m.len(),
                weights.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let AdamParams {
            lr,
            beta1,
            beta2,
            eps,
        } = self.params;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for i in 0..weights.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            weights[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_weights_unchanged() {
        let mut w = vec![1.5, -2.0, 0.25];
        let mut st = AdamState::new(3, AdamParams::default());
        st.step(&mut w, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(w, vec![1.5, -2.0, 0.25]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // After bias correction the first update has magnitude
        // lr * g / (|g| + eps'), i.e. almost exactly lr, opposite the sign
        // of the gradient.
        let params = AdamParams::with_lr(0.01);
        let mut w = vec![0.0, 0.0];
        let mut st = AdamState::new(2, params);
        st.step(&mut w, &[3.0, -0.004]).unwrap();
        assert!((w[0] + 0.01).abs() < 1e-6, "w0 = {}", w[0]);
        assert!((w[1] - 0.01).abs() < 1e-6, "w1 = {}", w[1]);
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // 100 steps of f(w) = (w-3)^2 with lr = 0.1 from w = 0.
        let mut w = vec![0.0];
        let mut st = AdamState::new(1, AdamParams::with_lr(0.1));
        for _ in 0..100 {
            let grad = 2.0 * (w[0] - 3.0);
            st.step(&mut w, &[grad]).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 0.1, "w = {}", w[0]);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let mut w = vec![0.0; 3];
        let mut st = AdamState::new(2, AdamParams::default());
        assert!(st.step(&mut w, &[0.0, 0.0, 0.0]).is_err());
    }
}
