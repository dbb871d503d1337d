//! Adam optimizer over [`MlpParams`].

use crate::error::{Error, Result};
use crate::mlp::MlpParams;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: MlpParams,
    second_moment: MlpParams,
    step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zeroed moments shaped like `params`, with beta1=0.9, beta2=0.999, eps=1e-8.
    pub fn new(params: &MlpParams, learning_rate: f64) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &MlpParams {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &MlpParams {
        &self.second_moment
    }
}

/// One bias-corrected Adam step that descends along `grads`.
///
/// Nothing is modified when `grads` contains a non-finite entry.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState) -> Result<()> {
    params.check_shape(grads)?;
    params.check_shape(&state.first_moment)?;
    if !grads.is_finite() {
        return Err(Error::NonFinite("optimizer gradient".into()));
    }
    state.step_count += 1;
    let t = state.step_count as f64;
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    let blocks = params
        .param_slices_mut()
        .into_iter()
        .zip(grads.param_slices())
        .zip(state.first_moment.param_slices_mut())
        .zip(state.second_moment.param_slices_mut());
    for (((p, g), m), v) in blocks {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
