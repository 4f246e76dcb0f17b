use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::TokenizerError;
use crate::corpus::RelationSchema;

/// Continuation prefix for non-initial subword pieces.
pub const CONTINUATION_PREFIX: &str = "##";

/// Fixed special tokens, in id order. Per-schema entity-type markers follow
/// immediately after, in schema order.
pub const FIXED_SPECIALS: [&str; 9] = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[E1]", "[/E1]", "[E2]", "[/E2]",
];

/// Subword vocabulary. Ids are dense in `[0, len)`. Special tokens (the nine
/// fixed ones plus one marker per entity type) occupy the lowest ids and are
/// never produced by segmenting ordinary text.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pieces: Vec<String>,
    /// Lookup restricted to non-special pieces; segmentation uses this so
    /// marker tokens can never be typed.
    text_lookup: HashMap<String, u32>,
    n_markers: usize,
    max_piece_chars: usize,
}

impl Vocabulary {
    fn build(pieces: Vec<String>, n_markers: usize) -> Self {
        let n_special = FIXED_SPECIALS.len() + n_markers;
        let mut text_lookup = HashMap::new();
        let mut max_piece_chars = 1;
        for (id, piece) in pieces.iter().enumerate().skip(n_special) {
            let chars = piece
                .strip_prefix(CONTINUATION_PREFIX)
                .unwrap_or(piece)
                .chars()
                .count();
            max_piece_chars = max_piece_chars.max(chars);
            text_lookup.insert(piece.clone(), id as u32);
        }
        Self {
            pieces,
            text_lookup,
            n_markers,
            max_piece_chars,
        }
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece(&self, id: u32) -> &str {
        &self.pieces[id as usize]
    }

    pub fn pad_id(&self) -> u32 {
        0
    }
    pub fn unk_id(&self) -> u32 {
        1
    }
    pub fn cls_id(&self) -> u32 {
        2
    }
    pub fn sep_id(&self) -> u32 {
        3
    }
    pub fn mask_id(&self) -> u32 {
        4
    }
    pub fn e1_open_id(&self) -> u32 {
        5
    }
    pub fn e1_close_id(&self) -> u32 {
        6
    }
    pub fn e2_open_id(&self) -> u32 {
        7
    }
    pub fn e2_close_id(&self) -> u32 {
        8
    }

    /// Marker token id for an entity-type index (schema order). The same
    /// token marks both the start and the end of an entity.
    pub fn marker_id(&self, entity_type_index: usize) -> u32 {
        assert!(entity_type_index < self.n_markers, "no marker for type");
        (FIXED_SPECIALS.len() + entity_type_index) as u32
    }

    pub fn num_markers(&self) -> usize {
        self.n_markers
    }

    pub fn num_special(&self) -> usize {
        FIXED_SPECIALS.len() + self.n_markers
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < self.num_special()
    }

    /// Segmentation lookup: non-special pieces only.
    pub(crate) fn text_piece_id(&self, piece: &str) -> Option<u32> {
        self.text_lookup.get(piece).copied()
    }

    pub(crate) fn max_piece_chars(&self) -> usize {
        self.max_piece_chars
    }

    /// SHA-256 over the piece list; checkpoints embed this to detect
    /// vocabulary mismatches.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for piece in &self.pieces {
            hasher.update(piece.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize().into()
    }

    /// One piece per line, line number = id.
    pub fn to_file(&self, path: &Path) -> Result<(), TokenizerError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for piece in &self.pieces {
            writeln!(out, "{piece}")?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, TokenizerError> {
        let text = std::fs::read_to_string(path)?;
        let pieces: Vec<String> = text.lines().map(String::from).collect();
        if pieces.len() < FIXED_SPECIALS.len() {
            return Err(TokenizerError::BadVocabFile(
                "fewer pieces than fixed special tokens".into(),
            ));
        }
        for (i, expected) in FIXED_SPECIALS.iter().enumerate() {
            if pieces[i] != *expected {
                return Err(TokenizerError::BadVocabFile(format!(
                    "expected special {expected:?} at id {i}, found {:?}",
                    pieces[i]
                )));
            }
        }
        // Marker tokens are the bracketed pieces directly after the fixed
        // specials, as written by `to_file`.
        let n_markers = pieces[FIXED_SPECIALS.len()..]
            .iter()
            .take_while(|p| p.starts_with('[') && p.ends_with(']'))
            .count();
        Ok(Self::build(pieces, n_markers))
    }
}

/// Builds a vocabulary from raw word sequences: all special and marker
/// tokens, every character seen (initial and continuation form, as the
/// segmentation fallback), then the most frequent whole words and the most
/// frequent suffix pieces up to `target_size`.
pub fn build_vocabulary<'a, I>(
    raw_texts: I,
    target_size: usize,
    schema: &RelationSchema,
) -> Result<Vocabulary, TokenizerError>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut word_freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut chars: BTreeSet<char> = BTreeSet::new();
    for words in raw_texts {
        for w in words {
            *word_freq.entry(w.clone()).or_insert(0) += 1;
            chars.extend(w.chars());
        }
    }

    let mut pieces: Vec<String> = FIXED_SPECIALS.iter().map(|s| s.to_string()).collect();
    for t in &schema.entity_types {
        pieces.push(format!("[{t}]"));
    }
    let n_markers = schema.entity_types.len();

    let required = pieces.len() + 2 * chars.len();
    if target_size < required {
        return Err(TokenizerError::TargetTooSmall {
            required,
            target: target_size,
        });
    }

    let mut present: BTreeSet<String> = pieces.iter().cloned().collect();
    let push = |pieces: &mut Vec<String>, present: &mut BTreeSet<String>, p: String| {
        if present.insert(p.clone()) {
            pieces.push(p);
        }
    };
    for &c in &chars {
        push(&mut pieces, &mut present, c.to_string());
        push(&mut pieces, &mut present, format!("{CONTINUATION_PREFIX}{c}"));
    }

    // Most frequent whole words, ties broken lexicographically.
    let mut by_freq: Vec<(&String, &u64)> = word_freq.iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    for (word, _) in &by_freq {
        if pieces.len() >= target_size {
            break;
        }
        push(&mut pieces, &mut present, (*word).clone());
    }

    // Frequent suffix pieces for the remaining budget.
    if pieces.len() < target_size {
        let mut suffix_freq: BTreeMap<String, u64> = BTreeMap::new();
        for (word, freq) in &word_freq {
            let cs: Vec<char> = word.chars().collect();
            for start in 1..cs.len() {
                let suffix: String = cs[start..].iter().collect();
                *suffix_freq
                    .entry(format!("{CONTINUATION_PREFIX}{suffix}"))
                    .or_insert(0) += freq;
            }
        }
        let mut by_freq: Vec<(&String, &u64)> = suffix_freq.iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        for (suffix, _) in by_freq {
            if pieces.len() >= target_size {
                break;
            }
            push(&mut pieces, &mut present, suffix.clone());
        }
    }

    Ok(Vocabulary::build(pieces, n_markers))
}
