//! Adam with bias correction, plus global gradient-norm clipping.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::tensor::{Parameter, Tensor};
use crate::error::{Error, Result};

/// Default learning rate for the shift regressor.
pub const DEFAULT_LR: f64 = 5e-5;
/// Default global gradient-norm clip threshold.
pub const DEFAULT_CLIP: f64 = 100.0;

/// Optimizer state: one pair of moment tensors per parameter, in parameter
/// order, plus the shared step count and hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &[&Parameter], lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first_moment: params.iter().map(|p| Tensor::zeros(&p.value.shape)).collect(),
            second_moment: params.iter().map(|p| Tensor::zeros(&p.value.shape)).collect(),
        }
    }
}

/// One bias-corrected Adam update over all parameters, consuming the
/// gradients currently stored in each parameter.
pub fn adam_step(params: &mut [&mut Parameter], state: &mut AdamState) -> Result<()> {
    if params.len() != state.first_moment.len() {
        return Err(Error::ShapeMismatch(
            "optimizer state does not match parameter list".into(),
        ));
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - state.beta1.powf(t);
    let bc2 = 1.0 - state.beta2.powf(t);
    for (i, p) in params.iter_mut().enumerate() {
        let m = &mut state.first_moment[i].values;
        let v = &mut state.second_moment[i].values;
        for ((pv, g), (mi, vi)) in p
            .value
            .values
            .iter_mut()
            .zip(&p.grad.values)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = state.beta1 * *mi + (1.0 - state.beta1) * g;
            *vi = state.beta2 * *vi + (1.0 - state.beta2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *pv -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

/// Scale all gradients so their global L2 norm is at most `threshold`.
///
/// Returns the pre-clip norm. NaN gradients abort: silent corruption of a
/// training run is worse than a crash.
pub fn clip_grad_norm(params: &mut [&mut Parameter], threshold: f64) -> Result<f64> {
    let mut sq = 0.0;
    for p in params.iter() {
        for g in &p.grad.values {
            if !g.is_finite() {
                return Err(Error::NotFinite("gradient"));
            }
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > threshold {
        let scale = threshold / norm;
        for p in params.iter_mut() {
            for g in p.grad.values.iter_mut() {
                *g *= scale;
            }
        }
    }
    Ok(norm)
}
