//! Scoring: micro-averaged P/R/F1 over non-null classes, per-class
//! breakdowns, seed aggregation, and the cross-lingual transfer matrix with
//! its transfer-efficiency summary.

mod metrics;
mod transfer;

pub use metrics::{
    aggregate_seeds, compute_metrics, metrics_csv, micro_scores, predict_corpus, ClassScores,
    EvalReport, PredictionRecord, SeedSummary,
};
pub use transfer::{compute_rho, TransferMatrix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and prediction lists differ in length ({golds} vs {preds})")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("transfer efficiency needs at least two languages")]
    TooFewLanguages,
    #[error("language {0:?} not present in the transfer matrix")]
    MissingLanguage(String),
    #[error("supervised score for target {0:?} is zero; transfer ratio undefined")]
    DegenerateSupervised(String),
    #[error(transparent)]
    Model(#[from] crate::transformer::ModelError),
    #[error("encoding failed: {0}")]
    Encode(#[from] crate::encoding::EncodeError),
}
