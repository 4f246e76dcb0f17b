//! Relation-extraction data model: schemas, sentences, candidate pairs,
//! corpus IO, deterministic splits and the synthetic multilingual generator.

mod candidates;
mod data;
mod loader;
mod schema;
mod split;
mod synthetic;

pub use candidates::{generate_candidates, CandidateSet};
pub use data::{EntityMention, RelationAnnotation, RelationInstance, Sentence};
pub use loader::{load_corpus, load_schema, save_corpus};
pub use schema::RelationSchema;
pub use split::split_corpus;
pub use synthetic::{
    generate_synthetic, load_language_specs, relation_label, LanguageCorpus, SyntheticCorpus,
    SyntheticLanguage, WordOrder,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("unknown type {0:?}")]
    UnknownType(String),
    #[error("entity span out of range in sentence {0:?}")]
    SpanOutOfRange(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("synthetic generation needs at least one language spec")]
    EmptySpec,
    #[error("schema too small for synthetic generation: need >=2 entity types and >=2 relation types")]
    SchemaTooSmall,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
