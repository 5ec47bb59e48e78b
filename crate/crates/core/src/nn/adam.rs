//! Adam with L2-style weight decay: the decay term is added to the gradient
//! before the moment updates, as in the classic (non-decoupled) variant.

use serde::{Deserialize, Serialize};

use super::model::{Gradients, ModelParams};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First and second moment accumulators over a flat parameter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn for_model(params: &ModelParams) -> Self {
        Self::new(params.num_parameters())
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One update over parameter blocks laid out back to back. Blocks must
    /// have the same lengths on every call.
    pub fn update_blocks(
        &mut self,
        params: &mut [&mut [f64]],
        grads: &[&[f64]],
        cfg: &AdamConfig,
    ) -> Result<(), NnError> {
        let total: usize = params.iter().map(|b| b.len()).sum();
        let gtotal: usize = grads.iter().map(|b| b.len()).sum();
        if total != self.m.len() || gtotal != total || params.len() != grads.len() {
            return Err(NnError::Dimension {
                what: "adam parameter layout",
                expected: self.m.len(),
                found: total,
            });
        }
        if grads.iter().any(|b| b.iter().any(|g| !g.is_finite())) {
            return Err(NnError::NonFiniteGradient);
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let mut k = 0;
        for (pb, gb) in params.iter_mut().zip(grads) {
            for (p, &g) in pb.iter_mut().zip(gb.iter()) {
                let g = g + cfg.weight_decay * *p;
                let m = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * g;
                let v = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * g * g;
                self.m[k] = m;
                self.v[k] = v;
                *p -= cfg.lr * (m / bc1) / ((v / bc2).sqrt() + cfg.eps);
                k += 1;
            }
        }
        Ok(())
    }

    /// Single flat parameter vector.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], cfg: &AdamConfig) -> Result<(), NnError> {
        self.update_blocks(&mut [params], &[grads], cfg)
    }
}

pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), NnError> {
    let g = grads.0.blocks();
    let mut p = params.blocks_mut();
    state.update_blocks(&mut p, &g, cfg)
}
