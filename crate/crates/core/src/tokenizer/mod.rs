//! Subword vocabulary and greedy longest-match tokenization with
//! word -> piece span alignment.

mod vocab;
mod wordpiece;

pub use vocab::{build_vocabulary, Vocabulary, CONTINUATION_PREFIX, FIXED_SPECIALS};
pub use wordpiece::{align_entity_spans, tokenize, TokenizedSentence};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("vocabulary target size {target} below required minimum {required}")]
    TargetTooSmall { required: usize, target: usize },
    #[error("bad vocabulary file: {0}")]
    BadVocabFile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
