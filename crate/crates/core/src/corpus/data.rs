use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CorpusError, RelationSchema};

/// A contiguous entity span. Word indices are 1-based and inclusive, matching
/// the on-disk corpus format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub id: String,
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub entity_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub arg1: String,
    pub arg2: String,
    #[serde(rename = "type")]
    pub relation_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub language: String,
    pub words: Vec<String>,
    #[serde(default)]
    pub entities: Vec<EntityMention>,
    #[serde(default)]
    pub relations: Vec<RelationAnnotation>,
}

impl Sentence {
    /// Checks all structural invariants against a schema.
    pub fn validate(&self, schema: &RelationSchema) -> Result<(), CorpusError> {
        if self.words.is_empty() {
            return Err(CorpusError::SpanOutOfRange(self.id.clone()));
        }
        let n = self.words.len();
        let mut ids = std::collections::HashSet::new();
        for e in &self.entities {
            if e.start < 1 || e.end < e.start || e.end > n {
                return Err(CorpusError::SpanOutOfRange(self.id.clone()));
            }
            if schema.entity_type_index(&e.entity_type).is_none() {
                return Err(CorpusError::UnknownType(e.entity_type.clone()));
            }
            if !ids.insert(&e.id) {
                return Err(CorpusError::MalformedRecord {
                    line: 0,
                    reason: format!("duplicate entity id {:?} in sentence {:?}", e.id, self.id),
                });
            }
        }
        for r in &self.relations {
            if r.arg1 == r.arg2 {
                return Err(CorpusError::MalformedRecord {
                    line: 0,
                    reason: format!("self-relation on entity {:?}", r.arg1),
                });
            }
            for arg in [&r.arg1, &r.arg2] {
                if !self.entities.iter().any(|e| &e.id == arg) {
                    return Err(CorpusError::MalformedRecord {
                        line: 0,
                        reason: format!("relation argument {arg:?} not found in sentence {:?}", self.id),
                    });
                }
            }
            if schema.relation_type_index(&r.relation_type).is_none() {
                return Err(CorpusError::UnknownType(r.relation_type.clone()));
            }
        }
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&EntityMention> {
        self.entities.iter().find(|e| e.id == id)
    }
}

/// One classification candidate: an ordered pair of disjoint mentions with
/// its gold class index (0 = no relation). `e1` is always the textually
/// earlier mention (`e1.end < e2.start`).
#[derive(Debug, Clone)]
pub struct RelationInstance {
    pub sentence: Arc<Sentence>,
    pub e1: EntityMention,
    pub e2: EntityMention,
    pub label: usize,
}
