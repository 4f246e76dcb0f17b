use std::ops::Range;

use super::{Vocabulary, CONTINUATION_PREFIX};
use crate::corpus::Sentence;

/// A tokenized word sequence plus the word -> piece alignment. The ranges
/// are a monotone partition of the piece sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub piece_ids: Vec<u32>,
    pub word_to_pieces: Vec<Range<usize>>,
}

/// Greedy longest-match segmentation, left to right within each word. The
/// first piece of a word is unprefixed; continuations carry `##`. If no
/// piece matches at some position, the unmatched remainder becomes a single
/// `[UNK]`.
pub fn tokenize(words: &[String], vocab: &Vocabulary) -> TokenizedSentence {
    let mut piece_ids = Vec::new();
    let mut word_to_pieces = Vec::with_capacity(words.len());
    for word in words {
        let start = piece_ids.len();
        segment_word(word, vocab, &mut piece_ids);
        word_to_pieces.push(start..piece_ids.len());
    }
    TokenizedSentence {
        piece_ids,
        word_to_pieces,
    }
}

fn segment_word(word: &str, vocab: &Vocabulary, out: &mut Vec<u32>) {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        out.push(vocab.unk_id());
        return;
    }
    let mut pos = 0;
    while pos < chars.len() {
        let remaining = chars.len() - pos;
        let max_len = remaining.min(vocab.max_piece_chars());
        let mut matched = None;
        for len in (1..=max_len).rev() {
            let fragment: String = chars[pos..pos + len].iter().collect();
            let candidate = if pos == 0 {
                fragment
            } else {
                format!("{CONTINUATION_PREFIX}{fragment}")
            };
            if let Some(id) = vocab.text_piece_id(&candidate) {
                matched = Some((id, len));
                break;
            }
        }
        match matched {
            Some((id, len)) => {
                out.push(id);
                pos += len;
            }
            None => {
                out.push(vocab.unk_id());
                return;
            }
        }
    }
}

/// Maps each entity mention's word span to its piece range. The word span is
/// 1-based inclusive; the result is a half-open piece range.
pub fn align_entity_spans(sentence: &Sentence, tok: &TokenizedSentence) -> Vec<Range<usize>> {
    sentence
        .entities
        .iter()
        .map(|e| {
            let start = tok.word_to_pieces[e.start - 1].start;
            let end = tok.word_to_pieces[e.end - 1].end;
            start..end
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EntityMention, RelationSchema};
    use crate::tokenizer::build_vocabulary;

    fn schema() -> RelationSchema {
        RelationSchema::new(
            vec!["PER".into(), "ORG".into()],
            vec!["A".into(), "B".into()],
            false,
        )
        .unwrap()
    }

    fn vocab_from(texts: &[&str], size: usize) -> Vocabulary {
        let owned: Vec<Vec<String>> = texts
            .iter()
            .map(|t| t.split_whitespace().map(String::from).collect())
            .collect();
        let refs: Vec<&[String]> = owned.iter().map(|t| t.as_slice()).collect();
        build_vocabulary(refs, size, &schema()).unwrap()
    }

    #[test]
    fn whole_word_single_piece() {
        let vocab = vocab_from(&["hello there hello"], 64);
        let tok = tokenize(&["hello".into()], &vocab);
        assert_eq!(tok.piece_ids.len(), 1);
        assert_eq!(vocab.piece(tok.piece_ids[0]), "hello");
        assert_eq!(tok.word_to_pieces, vec![0..1]);
    }

    #[test]
    fn greedy_longest_match_unable() {
        // "un" and "##able" present as pieces ("##able" via the suffixes of
        // "enable"); the whole word "unable" is not.
        let vocab = vocab_from(&["un un un enable enable enable"], 30);
        assert!(vocab.text_piece_id("unable").is_none());
        assert!(vocab.text_piece_id("##able").is_some());
        let tok = tokenize(&["unable".into()], &vocab);
        let pieces: Vec<&str> = tok.piece_ids.iter().map(|&id| vocab.piece(id)).collect();
        assert_eq!(pieces, vec!["un", "##able"]);
    }

    #[test]
    fn unknown_chars_fall_back_to_unk() {
        let vocab = vocab_from(&["abc"], 32);
        let tok = tokenize(&["qzx".into()], &vocab);
        assert_eq!(tok.piece_ids, vec![vocab.unk_id()]);
    }

    #[test]
    fn specials_never_match_raw_text() {
        let vocab = vocab_from(&["abc"], 40);
        let tok = tokenize(&["[CLS]".into()], &vocab);
        assert!(tok.piece_ids.iter().all(|&id| !vocab.is_special(id) || id == vocab.unk_id()));
    }

    #[test]
    fn alignment_spans() {
        let vocab = vocab_from(&["aa bb aa bb cc"], 40);
        let words: Vec<String> = vec!["aa".into(), "bb".into(), "cc".into()];
        let tok = tokenize(&words, &vocab);
        let sentence = Sentence {
            id: "s".into(),
            language: "en".into(),
            words,
            entities: vec![
                EntityMention {
                    id: "e1".into(),
                    start: 1,
                    end: 2,
                    entity_type: "PER".into(),
                },
                EntityMention {
                    id: "e2".into(),
                    start: 3,
                    end: 3,
                    entity_type: "ORG".into(),
                },
            ],
            relations: vec![],
        };
        let spans = align_entity_spans(&sentence, &tok);
        assert_eq!(spans[0], tok.word_to_pieces[0].start..tok.word_to_pieces[1].end);
        assert_eq!(spans[1], tok.word_to_pieces[2].clone());
        assert!(spans[0].end <= spans[1].start, "disjoint mentions stay disjoint");
    }

    #[test]
    fn word_to_pieces_partitions() {
        let vocab = vocab_from(&["alpha beta gamma alpha"], 60);
        let words: Vec<String> = "alpha beta gamma delta"
            .split_whitespace()
            .map(String::from)
            .collect();
        let tok = tokenize(&words, &vocab);
        let mut cursor = 0;
        for range in &tok.word_to_pieces {
            assert_eq!(range.start, cursor);
            assert!(range.end > range.start);
            cursor = range.end;
        }
        assert_eq!(cursor, tok.piece_ids.len());
    }
}
