//! The encoder: learned token/position embeddings, post-norm Transformer
//! layers (multi-head self-attention + position-wise feed-forward, each with
//! residual connection and layer normalization), a tied masked-language-model
//! output head, and exact analytic gradients for every parameter.

mod backward;
mod checkpoint;
mod config;
mod forward;
mod params;

pub use backward::backward_from_hidden;
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader, NamedTensor};
pub use config::ModelConfig;
pub use forward::{encode, forward, mlm_logits, DropoutPlan, ForwardTrace, LayerTrace};
pub use params::{
    init_parameters, LayerParams, ModelParameters, TensorCollection, TensorMut, TensorRef,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("sequence length {len} exceeds max_positions {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("piece id {id} out of range for vocab size {vocab}")]
    IdOutOfRange { id: u32, vocab: usize },
    #[error("position {0} out of range")]
    PositionOutOfRange(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("checkpoint vocabulary hash does not match the supplied vocabulary")]
    VocabHashMismatch,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
