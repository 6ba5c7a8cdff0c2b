use super::Tensor;
use crate::error::{Error, Result};

/// Per-parameter Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state for a parameter of `len` values with the usual
    /// `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
    pub fn new(len: usize, learning_rate: f64) -> Self {
        AdamState {
            step: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam step. Consumes (zeroes) the parameter gradient.
pub fn adam_update(param: &mut Tensor, state: &mut AdamState) -> Result<()> {
    if state.learning_rate.is_nan() || state.learning_rate <= 0.0 {
        return Err(Error::contract("learning rate must be positive"));
    }
    if state.first_moment.len() != param.len() || state.second_moment.len() != param.len() {
        return Err(Error::Shape {
            op: "adam_update",
            expected: format!("moments of {} values", param.len()),
            actual: vec![state.first_moment.len()],
        });
    }
    let grad = param
        .grad()
        .ok_or_else(|| Error::contract("adam_update: parameter has no gradient"))?
        .to_vec();
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);
    for (((p, g), m), v) in param
        .data_mut()
        .iter_mut()
        .zip(&grad)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    param.zero_grad();
    param.ensure_finite("adam_update")
}

/// Adam over every parameter of a module.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            states: Vec::new(),
        }
    }

    /// Averages accumulated gradients over `batch` samples and takes one step.
    pub fn step(&mut self, params: Vec<&mut Tensor>, batch: usize) -> Result<()> {
        if self.states.is_empty() {
            self.states = params
                .iter()
                .map(|p| AdamState::new(p.len(), self.learning_rate))
                .collect();
        }
        if self.states.len() != params.len() {
            return Err(Error::State("optimizer bound to a different module".into()));
        }
        let scale = 1.0 / batch.max(1) as f64;
        for (p, s) in params.into_iter().zip(&mut self.states) {
            if scale != 1.0 {
                for g in p.grad_mut() {
                    *g *= scale;
                }
            } else {
                p.grad_mut();
            }
            adam_update(p, s)?;
        }
        Ok(())
    }
}
