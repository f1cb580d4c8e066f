use super::{TrainConfig, TrainError};
use crate::model::{Parameters, Tensor};

/// First and second moment buffers plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamWState {
    pub fn new(params: &Parameters) -> Self {
        let zeros: Vec<Tensor> = params.ids().map(|id| Tensor::zeros(params.get(id).shape())).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One AdamW update with decoupled weight decay and bias correction.
///
/// Every gradient is checked before anything is written, so a non-finite
/// gradient leaves parameters and state untouched.
pub fn adamw_step(params: &mut Parameters, state: &mut AdamWState, config: &TrainConfig) -> Result<(), TrainError> {
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(TrainError::StateMismatch);
    }
    for id in params.ids() {
        let grad = params.grad(id).ok_or(TrainError::MissingGradients)?;
        if !grad.is_finite() {
            return Err(TrainError::NonFiniteGradient {
                tensor: params.name(id).to_string(),
            });
        }
        if state.m[id.index()].shape() != grad.shape() {
            return Err(TrainError::StateMismatch);
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let decay = 1.0 - config.learning_rate * config.weight_decay;
    let (tensors, grads) = params.tensors_and_grads().ok_or(TrainError::MissingGradients)?;
    for (((theta, g), m), v) in tensors.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        let parts = theta
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()));
        for ((p, &g), (m, v)) in parts {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p = *p * decay - config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}
