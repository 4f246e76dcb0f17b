use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, EntityMention, RelationAnnotation, RelationSchema, Sentence};

/// Constituent order of a synthetic language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordOrder {
    #[serde(rename = "SVO")]
    Svo,
    #[serde(rename = "SOV")]
    Sov,
    #[serde(rename = "VSO")]
    Vso,
}

/// Specification of one synthetic language. Languages share an abstract
/// lexeme inventory; `shared_anchor_fraction` controls how many lexemes keep
/// an identical surface form across languages (playing the role of shared
/// multilingual subword anchors).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticLanguage {
    pub name: String,
    pub word_order: WordOrder,
    pub shared_anchor_fraction: f64,
    pub seed: u64,
    /// Filled during generation: abstract lexeme -> surface form.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lexicon: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct LanguageCorpus {
    pub spec: SyntheticLanguage,
    pub sentences: Vec<Arc<Sentence>>,
    /// Unlabeled surface text, one line per sentence (for MLM pretraining).
    pub raw_text: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub per_language: Vec<LanguageCorpus>,
}

/// Loads a JSON array of language specs.
pub fn load_language_specs(path: &Path) -> Result<Vec<SyntheticLanguage>, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let specs: Vec<SyntheticLanguage> =
        serde_json::from_str(&text).map_err(|e| CorpusError::MalformedRecord {
            line: e.line(),
            reason: e.to_string(),
        })?;
    for s in &specs {
        if !(0.0..=1.0).contains(&s.shared_anchor_fraction) {
            return Err(CorpusError::MalformedRecord {
                line: 0,
                reason: format!("shared_anchor_fraction out of range for {:?}", s.name),
            });
        }
    }
    Ok(specs)
}

const N_NAMES: usize = 24;
const N_NULL_VERBS: usize = 2;
const N_POLY_VERBS: usize = 2;
const N_DETS: usize = 2;
const N_PREPS: usize = 2;
const N_ADJUNCT_NOUNS: usize = 8;

/// Gold relation class for a clause, as a deterministic function of the
/// abstract verb lexeme and the two entity-type indices. Class 0 is the
/// null class; classes 1..=K follow schema order.
///
/// Verb lexemes:
///   `v_rel{k}`  -> class k+1 regardless of types;
///   `v_none{j}` -> class 0;
///   `v_poly{p}` -> class 1 + (t1*N_T + t2 + p) mod K (type-dependent).
pub fn relation_label(verb: &str, t1: usize, t2: usize, n_entity_types: usize, k: usize) -> usize {
    if let Some(n) = verb.strip_prefix("v_rel") {
        let idx: usize = n.parse().expect("verb lexeme index");
        1 + idx
    } else if verb.starts_with("v_none") {
        0
    } else if let Some(n) = verb.strip_prefix("v_poly") {
        let p: usize = n.parse().expect("verb lexeme index");
        1 + (t1 * n_entity_types + t2 + p) % k
    } else {
        panic!("unknown verb lexeme {verb:?}");
    }
}

fn fnv64(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for b in part.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    // Avalanche finalizer. Raw FNV moves a trailing-character difference
    // only weakly into the high bits, which made anchor decisions nearly
    // constant within a lexeme family (all names, all verbs, ...).
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51afd7ed558ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ceb9fe1a85ec53);
    h ^= h >> 33;
    h
}

fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic pronounceable pseudoword for a (lexeme, salt) pair.
fn pseudo_word(lexeme: &str, salt: &str) -> String {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut rng = ChaCha8Rng::seed_from_u64(fnv64(&[lexeme, salt]));
    let syllables = 3;
    let mut word = String::new();
    for _ in 0..syllables {
        word.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
        word.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
    }
    word
}

fn abstract_lexemes(k: usize) -> Vec<String> {
    let mut lexemes = Vec::new();
    for i in 0..N_NAMES {
        lexemes.push(format!("name{i:02}"));
    }
    for i in 0..k {
        lexemes.push(format!("v_rel{i}"));
    }
    for i in 0..N_NULL_VERBS {
        lexemes.push(format!("v_none{i}"));
    }
    for i in 0..N_POLY_VERBS {
        lexemes.push(format!("v_poly{i}"));
    }
    for i in 0..N_DETS {
        lexemes.push(format!("det{i}"));
    }
    for i in 0..N_PREPS {
        lexemes.push(format!("prep{i}"));
    }
    for i in 0..N_ADJUNCT_NOUNS {
        lexemes.push(format!("adj{i}"));
    }
    lexemes
}

fn build_lexicon(spec: &SyntheticLanguage, lexemes: &[String]) -> BTreeMap<String, String> {
    let mut lexicon = BTreeMap::new();
    let mut used = std::collections::HashSet::new();
    for lexeme in lexemes {
        // Anchor decision depends only on the lexeme, so two languages with
        // the same fraction share exactly the same anchored subset.
        let anchored = unit_interval(fnv64(&["anchor", lexeme])) < spec.shared_anchor_fraction;
        let salt = if anchored {
            "anchor".to_string()
        } else {
            format!("{}:{}", spec.name, spec.seed)
        };
        let mut surface = pseudo_word(lexeme, &salt);
        let mut bump = 0;
        while !used.insert(surface.clone()) {
            bump += 1;
            surface = pseudo_word(lexeme, &format!("{salt}:{bump}"));
        }
        lexicon.insert(lexeme.clone(), surface);
    }
    lexicon
}

/// Abstract content of one clause, shared across all languages.
struct Clause {
    t1: usize,
    t2: usize,
    subject: Vec<String>,
    object: Vec<String>,
    verb: String,
    subj_det: Option<String>,
    obj_det: Option<String>,
    adjunct: Vec<String>,
    label: usize,
}

fn sample_clause(
    rng: &mut ChaCha8Rng,
    schema: &RelationSchema,
    type_informative: bool,
) -> Clause {
    let n_t = schema.entity_types.len();
    let k = schema.relation_types.len();
    let t1 = rng.gen_range(0..n_t);
    let t2 = rng.gen_range(0..n_t);

    let name = |rng: &mut ChaCha8Rng| format!("name{:02}", rng.gen_range(0..N_NAMES));
    let np = |rng: &mut ChaCha8Rng| {
        let len = if rng.gen_bool(0.3) { 2 } else { 1 };
        (0..len).map(|_| name(rng)).collect::<Vec<_>>()
    };
    let subject = np(rng);
    let mut object = np(rng);
    while object[0] == subject[0] {
        object = np(rng);
    }

    let verb = if type_informative && rng.gen_bool(0.4) {
        format!("v_poly{}", rng.gen_range(0..N_POLY_VERBS))
    } else {
        let i = rng.gen_range(0..k + N_NULL_VERBS);
        if i < k {
            format!("v_rel{i}")
        } else {
            format!("v_none{}", i - k)
        }
    };
    let label = relation_label(&verb, t1, t2, n_t, k);

    let det = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            Some(format!("det{}", rng.gen_range(0..N_DETS)))
        } else {
            None
        }
    };
    let subj_det = det(rng);
    let obj_det = det(rng);
    let adjunct = if rng.gen_bool(0.5) {
        vec![
            format!("prep{}", rng.gen_range(0..N_PREPS)),
            format!("adj{}", rng.gen_range(0..N_ADJUNCT_NOUNS)),
        ]
    } else {
        vec![]
    };

    Clause {
        t1,
        t2,
        subject,
        object,
        verb,
        subj_det,
        obj_det,
        adjunct,
        label,
    }
}

/// Linearizes a clause for one language and returns the sentence together
/// with 1-based inclusive spans of the two entity mentions.
fn realize(
    clause: &Clause,
    spec: &SyntheticLanguage,
    schema: &RelationSchema,
    id: String,
) -> Sentence {
    let surf = |lex: &String| spec.lexicon[lex].clone();

    let mut subj: Vec<String> = Vec::new();
    if let Some(d) = &clause.subj_det {
        subj.push(surf(d));
    }
    let subj_ent_start_off = subj.len();
    subj.extend(clause.subject.iter().map(surf));

    let mut obj: Vec<String> = Vec::new();
    if let Some(d) = &clause.obj_det {
        obj.push(surf(d));
    }
    let obj_ent_start_off = obj.len();
    obj.extend(clause.object.iter().map(surf));

    let verb = vec![surf(&clause.verb)];
    let adjunct: Vec<String> = clause.adjunct.iter().map(surf).collect();

    // Constituent order; the subject always precedes the object.
    let chunks: Vec<(&str, &Vec<String>)> = match spec.word_order {
        WordOrder::Svo => vec![("s", &subj), ("v", &verb), ("o", &obj), ("a", &adjunct)],
        WordOrder::Sov => vec![("s", &subj), ("o", &obj), ("a", &adjunct), ("v", &verb)],
        WordOrder::Vso => vec![("v", &verb), ("s", &subj), ("o", &obj), ("a", &adjunct)],
    };

    let mut words = Vec::new();
    let mut subj_span = (0, 0);
    let mut obj_span = (0, 0);
    for (tag, chunk) in chunks {
        let base = words.len();
        words.extend(chunk.iter().cloned());
        match tag {
            "s" => {
                let start = base + subj_ent_start_off + 1;
                subj_span = (start, start + clause.subject.len() - 1);
            }
            "o" => {
                let start = base + obj_ent_start_off + 1;
                obj_span = (start, start + clause.object.len() - 1);
            }
            _ => {}
        }
    }

    let entities = vec![
        EntityMention {
            id: "e1".into(),
            start: subj_span.0,
            end: subj_span.1,
            entity_type: schema.entity_types[clause.t1].clone(),
        },
        EntityMention {
            id: "e2".into(),
            start: obj_span.0,
            end: obj_span.1,
            entity_type: schema.entity_types[clause.t2].clone(),
        },
    ];
    let relations = if clause.label > 0 {
        vec![RelationAnnotation {
            arg1: "e1".into(),
            arg2: "e2".into(),
            relation_type: schema.relation_types[clause.label - 1].clone(),
        }]
    } else {
        vec![]
    };

    Sentence {
        id,
        language: spec.name.clone(),
        words,
        entities,
        relations,
    }
}

/// Generates parallel labeled corpora for the given language specs. The
/// abstract content is identical across languages; only lexicon and word
/// order differ. Deterministic per (specs, schema, n, seed).
pub fn generate_synthetic(
    specs: &[SyntheticLanguage],
    schema: &RelationSchema,
    n_sentences_per_language: usize,
    type_informative: bool,
    seed: u64,
) -> Result<SyntheticCorpus, CorpusError> {
    if specs.is_empty() {
        return Err(CorpusError::EmptySpec);
    }
    if schema.entity_types.len() < 2 || schema.relation_types.len() < 2 {
        return Err(CorpusError::SchemaTooSmall);
    }
    let lexemes = abstract_lexemes(schema.relation_types.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses: Vec<Clause> = (0..n_sentences_per_language)
        .map(|_| sample_clause(&mut rng, schema, type_informative))
        .collect();

    let mut per_language = Vec::new();
    for spec in specs {
        let mut spec = spec.clone();
        spec.lexicon = build_lexicon(&spec, &lexemes);
        let mut sentences = Vec::new();
        let mut raw_text = Vec::new();
        for (i, clause) in clauses.iter().enumerate() {
            let s = realize(clause, &spec, schema, format!("{}-{i:05}", spec.name));
            raw_text.push(s.words.join(" "));
            sentences.push(Arc::new(s));
        }
        per_language.push(LanguageCorpus {
            spec,
            sentences,
            raw_text,
        });
    }
    Ok(SyntheticCorpus { per_language })
}
