//! Model-ready example construction: [CLS]/[SEP] framing, uniform or
//! entity-type marker insertion, and windowed truncation. Marker positions
//! are carried as data; under entity-type markers the two types can
//! coincide, so rediscovering markers by token search would be ambiguous.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RelationInstance, RelationSchema};
use crate::tokenizer::{align_entity_spans, tokenize, TokenizedSentence, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkerScheme {
    /// Four distinct boundary tokens [E1] [/E1] [E2] [/E2].
    #[serde(rename = "um")]
    Uniform,
    /// The entity's type marker at both boundaries of that entity.
    #[serde(rename = "etm")]
    EntityType,
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("entities require {required} positions but max_len is {max_len}")]
    EntitiesTooFar { required: usize, max_len: usize },
    #[error("max_len {0} below minimum of 8")]
    MaxLenTooSmall(usize),
}

/// One encoded classification example. `m*` fields index the four marker
/// tokens in `piece_ids`; `e*_range` are the entity piece ranges proper
/// (between their markers).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub piece_ids: Vec<u32>,
    pub m1_start: usize,
    pub m1_end: usize,
    pub m2_start: usize,
    pub m2_end: usize,
    pub e1_range: Range<usize>,
    pub e2_range: Range<usize>,
    /// Entity-type indices of the pair (schema order), carried for
    /// type-embedding augmentation at the classifier.
    pub t1: usize,
    pub t2: usize,
    pub label: usize,
    pub max_len: usize,
}

/// Splices the four marker tokens around the two entity piece ranges and
/// adds [CLS]/[SEP]. Output length is the input length + 6.
pub fn insert_markers(
    tok: &TokenizedSentence,
    e1: &Range<usize>,
    e2: &Range<usize>,
    t1: usize,
    t2: usize,
    scheme: MarkerScheme,
    vocab: &Vocabulary,
) -> (Vec<u32>, [usize; 4]) {
    assert!(e1.end <= e2.start, "e1 must precede e2 with disjoint spans");
    let (m1_open, m1_close, m2_open, m2_close) = match scheme {
        MarkerScheme::Uniform => (
            vocab.e1_open_id(),
            vocab.e1_close_id(),
            vocab.e2_open_id(),
            vocab.e2_close_id(),
        ),
        MarkerScheme::EntityType => (
            vocab.marker_id(t1),
            vocab.marker_id(t1),
            vocab.marker_id(t2),
            vocab.marker_id(t2),
        ),
    };

    let ids = &tok.piece_ids;
    let mut out = Vec::with_capacity(ids.len() + 6);
    out.push(vocab.cls_id());
    out.extend_from_slice(&ids[..e1.start]);
    let m1_start = out.len();
    out.push(m1_open);
    out.extend_from_slice(&ids[e1.clone()]);
    let m1_end = out.len();
    out.push(m1_close);
    out.extend_from_slice(&ids[e1.end..e2.start]);
    let m2_start = out.len();
    out.push(m2_open);
    out.extend_from_slice(&ids[e2.clone()]);
    let m2_end = out.len();
    out.push(m2_close);
    out.extend_from_slice(&ids[e2.end..]);
    out.push(vocab.sep_id());

    (out, [m1_start, m1_end, m2_start, m2_end])
}

/// Builds the final encoded example, applying windowed truncation when the
/// marked sequence exceeds `max_len`. The window is centered between the two
/// marked spans and shifted minimally so both fit.
pub fn encode_example(
    tok: &TokenizedSentence,
    e1: &Range<usize>,
    e2: &Range<usize>,
    t1: usize,
    t2: usize,
    label: usize,
    scheme: MarkerScheme,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedExample, EncodeError> {
    if max_len < 8 {
        return Err(EncodeError::MaxLenTooSmall(max_len));
    }
    let (ids, [m1_start, m1_end, m2_start, m2_end]) =
        insert_markers(tok, e1, e2, t1, t2, scheme, vocab);
    let e1_len = e1.end - e1.start;
    let e2_len = e2.end - e2.start;

    if ids.len() <= max_len {
        return Ok(EncodedExample {
            e1_range: m1_start + 1..m1_start + 1 + e1_len,
            e2_range: m2_start + 1..m2_start + 1 + e2_len,
            piece_ids: ids,
            m1_start,
            m1_end,
            m2_start,
            m2_end,
            t1,
            t2,
            label,
            max_len,
        });
    }

    let required = (m2_end - m1_start + 1) + 2;
    if required > max_len {
        return Err(EncodeError::EntitiesTooFar { required, max_len });
    }

    // Interior window (excludes [CLS]/[SEP]) of size max_len - 2, centered
    // on the midpoint between the two marked spans.
    let w = max_len - 2;
    let center = (m1_end + m2_start) / 2;
    let mut ws = center.saturating_sub(w / 2);
    ws = ws.min(m1_start);
    ws = ws.max((m2_end + 1).saturating_sub(w));
    ws = ws.clamp(1, ids.len() - 1 - w);

    let mut out = Vec::with_capacity(max_len);
    out.push(vocab.cls_id());
    out.extend_from_slice(&ids[ws..ws + w]);
    out.push(vocab.sep_id());
    let shift = |p: usize| p - ws + 1;

    Ok(EncodedExample {
        piece_ids: out,
        m1_start: shift(m1_start),
        m1_end: shift(m1_end),
        m2_start: shift(m2_start),
        m2_end: shift(m2_end),
        e1_range: shift(m1_start) + 1..shift(m1_start) + 1 + e1_len,
        e2_range: shift(m2_start) + 1..shift(m2_start) + 1 + e2_len,
        t1,
        t2,
        label,
        max_len,
    })
}

/// Tokenizes and encodes one candidate instance end to end.
pub fn encode_instance(
    instance: &RelationInstance,
    schema: &RelationSchema,
    vocab: &Vocabulary,
    scheme: MarkerScheme,
    max_len: usize,
) -> Result<EncodedExample, EncodeError> {
    let tok = tokenize(&instance.sentence.words, vocab);
    let spans = align_entity_spans(&instance.sentence, &tok);
    let find = |id: &str| {
        instance
            .sentence
            .entities
            .iter()
            .position(|e| e.id == id)
            .expect("mention belongs to sentence")
    };
    let e1 = spans[find(&instance.e1.id)].clone();
    let e2 = spans[find(&instance.e2.id)].clone();
    let t1 = schema
        .entity_type_index(&instance.e1.entity_type)
        .expect("schema-valid instance");
    let t2 = schema
        .entity_type_index(&instance.e2.entity_type)
        .expect("schema-valid instance");
    encode_example(
        &tok,
        &e1,
        &e2,
        t1,
        t2,
        instance.label,
        scheme,
        vocab,
        max_len,
    )
}

/// Debug dump line: `id<TAB>space-joined pieces`.
pub fn dump_example(id: &str, example: &EncodedExample, vocab: &Vocabulary) -> String {
    let pieces: Vec<&str> = example
        .piece_ids
        .iter()
        .map(|&p| vocab.piece(p))
        .collect();
    format!("{id}\t{}", pieces.join(" "))
}

impl EncodedExample {
    /// Checks the structural ordering invariant of the marker positions.
    pub fn check_invariants(&self, vocab: &Vocabulary) {
        assert_eq!(self.piece_ids[0], vocab.cls_id());
        assert_eq!(*self.piece_ids.last().unwrap(), vocab.sep_id());
        assert!(self.m1_start < self.e1_range.start || self.e1_range.is_empty());
        assert!(self.m1_start < self.m1_end);
        assert_eq!(self.e1_range.start, self.m1_start + 1);
        assert_eq!(self.e1_range.end, self.m1_end);
        assert!(self.m1_end < self.m2_start);
        assert_eq!(self.e2_range.start, self.m2_start + 1);
        assert_eq!(self.e2_range.end, self.m2_end);
        assert!(self.piece_ids.len() <= self.max_len);
        for pos in [self.m1_start, self.m1_end, self.m2_start, self.m2_end] {
            assert!(vocab.is_special(self.piece_ids[pos]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RelationSchema;
    use crate::tokenizer::build_vocabulary;

    fn schema() -> RelationSchema {
        RelationSchema::new(
            vec!["GPE".into(), "PER".into()],
            vec!["Part-Whole".into()],
            false,
        )
        .unwrap()
    }

    fn nyc_fixture() -> (Vocabulary, TokenizedSentence, Range<usize>, Range<usize>) {
        let words: Vec<String> = "New York City is the most populous city in the United States ."
            .split_whitespace()
            .map(String::from)
            .collect();
        let texts = vec![words.clone()];
        let refs: Vec<&[String]> = texts.iter().map(|t| t.as_slice()).collect();
        let vocab = build_vocabulary(refs, 120, &schema()).unwrap();
        let tok = tokenize(&words, &vocab);
        // every word is in-vocab here, so word index == piece index
        assert_eq!(tok.piece_ids.len(), words.len());
        (vocab, tok, 0..3, 10..12)
    }

    #[test]
    fn entity_type_markers_match_expected_surface() {
        let (vocab, tok, e1, e2) = nyc_fixture();
        let (ids, pos) = insert_markers(&tok, &e1, &e2, 0, 0, MarkerScheme::EntityType, &vocab);
        let rendered: Vec<&str> = ids.iter().map(|&p| vocab.piece(p)).collect();
        assert_eq!(
            rendered.join(" "),
            "[CLS] [GPE] New York City [GPE] is the most populous city in the [GPE] United States [GPE] . [SEP]"
        );
        // all four markers are the same [GPE] token
        let marker = vocab.marker_id(0);
        for p in pos {
            assert_eq!(ids[p], marker);
        }
    }

    #[test]
    fn uniform_markers_match_expected_surface() {
        let (vocab, tok, e1, e2) = nyc_fixture();
        let (ids, pos) = insert_markers(&tok, &e1, &e2, 0, 0, MarkerScheme::Uniform, &vocab);
        let rendered: Vec<&str> = ids.iter().map(|&p| vocab.piece(p)).collect();
        assert_eq!(
            rendered.join(" "),
            "[CLS] [E1] New York City [/E1] is the most populous city in the [E2] United States [/E2] . [SEP]"
        );
        let marker_ids: Vec<u32> = pos.iter().map(|&p| ids[p]).collect();
        let mut unique = marker_ids.clone();
        unique.dedup();
        assert_eq!(unique.len(), 4, "uniform markers pairwise distinct");
    }

    #[test]
    fn adjacent_entities_keep_strict_ordering() {
        let (vocab, tok, _, _) = nyc_fixture();
        let ex = encode_example(
            &tok,
            &(0..2),
            &(2..4),
            0,
            1,
            0,
            MarkerScheme::EntityType,
            &vocab,
            128,
        )
        .unwrap();
        ex.check_invariants(&vocab);
        assert_eq!(ex.m1_end + 1, ex.m2_start);
    }

    #[test]
    fn short_sequence_unchanged() {
        let (vocab, tok, e1, e2) = nyc_fixture();
        let ex = encode_example(&tok, &e1, &e2, 0, 0, 1, MarkerScheme::EntityType, &vocab, 128)
            .unwrap();
        assert_eq!(ex.piece_ids.len(), tok.piece_ids.len() + 6);
        ex.check_invariants(&vocab);
        assert_eq!(ex.label, 1);
    }

    #[test]
    fn truncation_window_contains_both_spans() {
        // 200 filler pieces, entity spans near positions 90 and 110.
        let words: Vec<String> = (0..200).map(|i| format!("w{}", i % 7)).collect();
        let texts = vec![words.clone()];
        let refs: Vec<&[String]> = texts.iter().map(|t| t.as_slice()).collect();
        let vocab = build_vocabulary(refs, 64, &schema()).unwrap();
        let tok = tokenize(&words, &vocab);
        let per_word = tok.word_to_pieces[0].len();
        // choose spans in piece space via word spans 90..92 and 108..110
        let e1 = tok.word_to_pieces[90].start..tok.word_to_pieces[91].end;
        let e2 = tok.word_to_pieces[108].start..tok.word_to_pieces[109].end;
        let ex = encode_example(&tok, &e1, &e2, 0, 1, 0, MarkerScheme::EntityType, &vocab, 64)
            .unwrap();
        assert_eq!(ex.piece_ids.len(), 64);
        ex.check_invariants(&vocab);
        // window bounds from the centering rule: both marked spans inside
        assert!(ex.m1_start >= 1 && ex.m2_end <= 62);
        assert_eq!(ex.e1_range.len(), 2 * per_word);
    }

    #[test]
    fn entities_too_far() {
        let words: Vec<String> = (0..320).map(|i| format!("w{}", i % 5)).collect();
        let texts = vec![words.clone()];
        let refs: Vec<&[String]> = texts.iter().map(|t| t.as_slice()).collect();
        let vocab = build_vocabulary(refs, 40, &schema()).unwrap();
        let tok = tokenize(&words, &vocab);
        let e1 = tok.word_to_pieces[5].clone();
        let e2 = tok.word_to_pieces[300].clone();
        let err = encode_example(&tok, &e1, &e2, 0, 1, 0, MarkerScheme::EntityType, &vocab, 64)
            .unwrap_err();
        assert!(matches!(err, EncodeError::EntitiesTooFar { .. }));
    }

    #[test]
    fn marker_roundtrip_restores_pieces() {
        let (vocab, tok, e1, e2) = nyc_fixture();
        for scheme in [MarkerScheme::Uniform, MarkerScheme::EntityType] {
            let ex = encode_example(&tok, &e1, &e2, 0, 0, 0, scheme, &vocab, 128).unwrap();
            let mut restored = Vec::new();
            for (i, &id) in ex.piece_ids.iter().enumerate() {
                if i == 0
                    || i == ex.piece_ids.len() - 1
                    || i == ex.m1_start
                    || i == ex.m1_end
                    || i == ex.m2_start
                    || i == ex.m2_end
                {
                    continue;
                }
                restored.push(id);
            }
            assert_eq!(restored, tok.piece_ids);
        }
    }
}
