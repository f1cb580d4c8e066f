//! Optimizer, fine-tuning loop and pretraining data utilities.

mod adamw;
mod fit;
mod masking;
mod nsp;

pub use adamw::{adamw_step, AdamWState};
pub use fit::{
    cross_entropy_loss, evaluate, train_loop, train_loop_observed, DivergedRun, EpochRecord, Evaluation, LabeledPair,
    TrainOutput, TrainingHistory,
};
pub use masking::{mask_tokens, MaskedPair, MaskingPolicy, IGNORE_LABEL};
pub use nsp::{make_nsp_pairs, NspPair};

use crate::corpus::NUM_CLASSES;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite gradient in {tensor}")]
    NonFiniteGradient { tensor: String },
    #[error("gradients are missing; run a backward pass first")]
    MissingGradients,
    #[error("optimizer state does not match the parameters")]
    StateMismatch,
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("class {class} out of range")]
    LabelOutOfRange { class: usize },
    #[error("invalid masking policy: {0}")]
    Masking(String),
    #[error("next-sentence pairs: {0}")]
    Nsp(String),
    #[error("loss diverged at epoch {}, step {}", .0.epoch, .0.step)]
    Diverged(Box<DivergedRun>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Optimizer and loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub class_weights: Option<[f64; NUM_CLASSES]>,
    /// Extra best-checkpoint evaluations every this many steps, on top of
    /// the end of every epoch.
    pub eval_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.98,
            epsilon: 1e-8,
            weight_decay: 0.01,
            batch_size: 32,
            epochs: 20,
            seed: 42,
            class_weights: None,
            eval_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate {} must be positive", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return fail(format!("{name} {b} outside [0, 1)"));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return fail("epsilon must be positive".into());
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!("weight decay {} must be non-negative", self.weight_decay));
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1".into());
        }
        if self.eval_every == Some(0) {
            return fail("eval_every must be at least 1".into());
        }
        if let Some(w) = &self.class_weights {
            if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return fail(format!("class weights {w:?} must be positive"));
            }
        }
        Ok(())
    }
}
