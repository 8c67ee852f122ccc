//! Adam optimizer with bias-corrected moment estimates.

use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter optimizer state. One state per trained tensor; the step
/// counter advances once per `adam_step` call.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub first_moment: Tensor<T>,
    pub second_moment: Tensor<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(shape: Vec<usize>) -> Self {
        AdamState {
            step: 0,
            first_moment: Tensor::zeros(shape.clone()),
            second_moment: Tensor::zeros(shape),
        }
    }
}

/// One Adam update in place:
/// m ← β1·m + (1-β1)·g, v ← β2·v + (1-β2)·g², then
/// θ ← θ − lr·m̂/(√v̂ + ε) with bias corrections m̂ = m/(1-β1ᵗ), v̂ = v/(1-β2ᵗ).
pub fn adam_step<T: Real>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    state: &mut AdamState<T>,
    config: &AdamConfig,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.first_moment.shape() {
        return Err(Error::shape(
            "adam_step",
            format!(
                "param {:?}, grad {:?}, state {:?}",
                param.shape(),
                grad.shape(),
                state.first_moment.shape()
            ),
        ));
    }
    state.step += 1;
    let t = state.step;
    let b1 = T::from_f64(config.beta1);
    let b2 = T::from_f64(config.beta2);
    let one_m_b1 = T::from_f64(1.0 - config.beta1);
    let one_m_b2 = T::from_f64(1.0 - config.beta2);
    let eps = T::from_f64(config.epsilon);
    // bias corrections in f64 to avoid premature underflow of betaᵗ
    let corr1 = T::from_f64(1.0 / (1.0 - config.beta1.powi(t as i32)));
    let corr2 = T::from_f64(1.0 / (1.0 - config.beta2.powi(t as i32)));
    let lr = T::from_f64(config.learning_rate);

    let m = state.first_moment.data_mut();
    let v = state.second_moment.data_mut();
    let p = param.data_mut();
    let g = grad.data();
    for i in 0..p.len() {
        m[i] = b1 * m[i] + one_m_b1 * g[i];
        v[i] = b2 * v[i] + one_m_b2 * g[i] * g[i];
        let m_hat = m[i] * corr1;
        let v_hat = v[i] * corr2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
