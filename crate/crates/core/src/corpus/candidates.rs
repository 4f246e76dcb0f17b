use std::sync::Arc;

use super::{RelationInstance, RelationSchema, Sentence};

/// Candidate instances for one sentence plus the number of mention pairs
/// skipped because their spans are nested or overlapping.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pub instances: Vec<RelationInstance>,
    pub skipped_pairs: usize,
}

/// Enumerates all unordered mention pairs of a sentence and emits one
/// instance per pair of disjoint spans, with the textually earlier mention
/// as `e1`. Labels come from the gold annotations, defaulting to the null
/// class 0.
pub fn generate_candidates(sentence: &Arc<Sentence>, schema: &RelationSchema) -> CandidateSet {
    let mut mentions: Vec<_> = sentence.entities.iter().collect();
    mentions.sort_by_key(|m| (m.start, m.end, m.id.clone()));

    let mut set = CandidateSet::default();
    for i in 0..mentions.len() {
        for j in (i + 1)..mentions.len() {
            let (a, b) = (mentions[i], mentions[j]);
            if a.end >= b.start {
                set.skipped_pairs += 1;
                continue;
            }
            let mut label = 0usize;
            for rel in &sentence.relations {
                let forward = rel.arg1 == a.id && rel.arg2 == b.id;
                let reversed = rel.arg1 == b.id && rel.arg2 == a.id;
                if forward || reversed {
                    if let Some(c) = schema.class_index(&rel.relation_type, reversed) {
                        label = c;
                        break;
                    }
                }
            }
            set.instances.push(RelationInstance {
                sentence: Arc::clone(sentence),
                e1: a.clone(),
                e2: b.clone(),
                label,
            });
        }
    }
    set
}
