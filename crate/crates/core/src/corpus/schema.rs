use serde::{Deserialize, Serialize};

use super::CorpusError;

/// The label space of a relation-extraction task: the entity-type alphabet
/// and the K relation types. Class index 0 is reserved for "no relation";
/// classes 1..=K are the listed relation types in order. With
/// `direction_augmented`, classes K+1..=2K are the same types with the
/// arguments in reversed textual order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSchema {
    pub entity_types: Vec<String>,
    pub relation_types: Vec<String>,
    #[serde(default)]
    pub direction_augmented: bool,
}

impl RelationSchema {
    pub fn new(
        entity_types: Vec<String>,
        relation_types: Vec<String>,
        direction_augmented: bool,
    ) -> Result<Self, CorpusError> {
        let schema = Self {
            entity_types,
            relation_types,
            direction_augmented,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for (name, list) in [
            ("entity", &self.entity_types),
            ("relation", &self.relation_types),
        ] {
            for t in list {
                if t.is_empty() {
                    return Err(CorpusError::InvalidSchema(format!("empty {name} type name")));
                }
            }
            let mut seen = std::collections::HashSet::new();
            for t in list {
                if !seen.insert(t) {
                    return Err(CorpusError::InvalidSchema(format!(
                        "duplicate {name} type {t:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_relation_types(&self) -> usize {
        self.relation_types.len()
    }

    /// Total classifier classes including the null class.
    pub fn num_classes(&self) -> usize {
        if self.direction_augmented {
            2 * self.relation_types.len() + 1
        } else {
            self.relation_types.len() + 1
        }
    }

    pub fn entity_type_index(&self, name: &str) -> Option<usize> {
        self.entity_types.iter().position(|t| t == name)
    }

    pub fn relation_type_index(&self, name: &str) -> Option<usize> {
        self.relation_types.iter().position(|t| t == name)
    }

    /// Class index for a gold relation; `reversed` marks a gold annotation
    /// whose first argument is the textually later mention.
    pub fn class_index(&self, relation_type: &str, reversed: bool) -> Option<usize> {
        let k = self.relation_type_index(relation_type)?;
        if reversed && self.direction_augmented {
            Some(1 + self.relation_types.len() + k)
        } else {
            Some(1 + k)
        }
    }

    /// Human-readable name of a class index.
    pub fn class_name(&self, class: usize) -> String {
        let k = self.relation_types.len();
        if class == 0 {
            "NO_RELATION".to_string()
        } else if class <= k {
            self.relation_types[class - 1].clone()
        } else {
            format!("{}-REV", self.relation_types[class - 1 - k])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> RelationSchema {
        RelationSchema::new(
            vec!["PER".into(), "ORG".into()],
            vec!["Work-For".into(), "Part-Whole".into()],
            false,
        )
        .unwrap()
    }

    #[test]
    fn class_counts() {
        let mut s = schema();
        assert_eq!(s.num_classes(), 3);
        s.direction_augmented = true;
        assert_eq!(s.num_classes(), 5);
    }

    #[test]
    fn class_indices() {
        let mut s = schema();
        assert_eq!(s.class_index("Part-Whole", false), Some(2));
        // direction-insensitive: reversed maps to the same class
        assert_eq!(s.class_index("Part-Whole", true), Some(2));
        s.direction_augmented = true;
        assert_eq!(s.class_index("Part-Whole", true), Some(4));
        assert_eq!(s.class_name(4), "Part-Whole-REV");
        assert_eq!(s.class_name(0), "NO_RELATION");
    }

    #[test]
    fn rejects_duplicates_and_empties() {
        assert!(RelationSchema::new(vec!["PER".into(), "PER".into()], vec![], false).is_err());
        assert!(RelationSchema::new(vec!["".into()], vec![], false).is_err());
        assert!(
            RelationSchema::new(vec!["PER".into()], vec!["A".into(), "A".into()], false).is_err()
        );
    }
}
