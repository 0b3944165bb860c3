//! Adam with decoupled weight decay, in PyTorch's `AdamW` update order.

use super::mlp::{Gradients, MlpSurrogate};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdamW {
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(num_params: usize, weight_decay: f64) -> Self {
        AdamW {
            weight_decay,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One update of `params` in place:
    ///
    /// ```text
    /// θ ← θ (1 - lr·wd)
    /// m ← β1 m + (1-β1) g,   v ← β2 v + (1-β2) g²
    /// θ ← θ - lr · m̂ / (sqrt(v̂) + ε),   m̂ = m/(1-β1^t), v̂ = v/(1-β2^t)
    /// ```
    pub fn step<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: impl Iterator<Item = f64>,
        lr: f64,
    ) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        let decay = 1.0 - lr * self.weight_decay;
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *p *= decay;
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }

    pub fn step_model(&mut self, model: &mut MlpSurrogate, grads: &Gradients, lr: f64) {
        let params = model
            .layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()));
        let g = grads
            .layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied());
        self.step(params, g, lr);
    }
}
