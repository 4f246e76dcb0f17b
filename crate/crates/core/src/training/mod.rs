//! Optimization: Adam, masked-language-model pretraining, and supervised
//! fine-tuning with early stopping.

mod adam;
mod finetune;
mod mlm;

pub use adam::{AdamConfig, OptimizerState};
pub use finetune::{fine_tune, EpochLog, FineTuneResult, TrainConfig};
pub use mlm::{pretrain_mlm, MaskingVocab, PretrainConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("optimizer state does not match parameters: {0}")]
    StateMismatch(String),
    #[error("no training examples")]
    EmptyCorpus,
    #[error("no maskable text for pretraining")]
    EmptyText,
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] crate::transformer::ModelError),
}
