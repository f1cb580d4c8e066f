//! Encoder, classifier head and the autodiff tape they run on.

mod checkpoint;
mod config;
mod encoder;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
};
pub use config::{param_count, ModelConfig};
pub use encoder::{classify, embed, embedding_sum, encoder_forward, forward, predict, Batch, ClassifierOutput};
pub use params::{init_params, EmbeddingParams, LayerParams, Layout, ParamId, Parameters, INIT_STD};
pub use tape::{Tape, Var};
pub use tensor::{softmax, Tensor};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("variable does not belong to a differentiable path on this tape")]
    Untraced,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("tape was already differentiated")]
    AlreadyDifferentiated,
    #[error("gradients from a previous backward pass were not reset")]
    GradientsNotReset,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
