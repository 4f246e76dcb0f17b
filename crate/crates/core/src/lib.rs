//! Marker-encoded Transformer relation extraction, from corpus to
//! cross-lingual transfer matrix.
//!
//! The pipeline: a corpus of sentences with typed entity mentions is turned
//! into candidate pairs; each pair is rendered as a subword sequence with
//! entity markers spliced around the mentions; a small Transformer encoder
//! (optionally pretrained with masked-language modeling) produces hidden
//! states that a summary scheme condenses into a fixed vector for a softmax
//! relation classifier. Zero-shot cross-lingual evaluation scores a model
//! trained on one language against every other, summarized as a transfer
//! matrix with per-source transfer efficiency.
//!
//! Everything is deterministic given explicit seeds.

pub mod corpus;
pub mod encoding;
pub mod evaluation;
pub mod head;
pub mod math;
pub mod model;
pub mod tokenizer;
pub mod training;
pub mod transformer;

pub use corpus::{RelationInstance, RelationSchema, Sentence};
pub use encoding::{EncodedExample, MarkerScheme};
pub use head::{SummaryKind, SummaryScheme};
pub use model::{FullModel, HeadConfig};
pub use tokenizer::Vocabulary;
pub use transformer::ModelConfig;
