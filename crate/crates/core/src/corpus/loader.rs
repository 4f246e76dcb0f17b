use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, RelationSchema, Sentence};

/// Loads a schema from a JSON file.
pub fn load_schema(path: &Path) -> Result<RelationSchema, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let schema: RelationSchema = serde_json::from_str(&text).map_err(|e| {
        CorpusError::MalformedRecord {
            line: e.line(),
            reason: e.to_string(),
        }
    })?;
    schema.validate()?;
    Ok(schema)
}

/// Loads a line-delimited JSON corpus, validating every record against the
/// schema. Unknown types and invalid spans reject the file.
pub fn load_corpus(path: &Path, schema: &RelationSchema) -> Result<Vec<Sentence>, CorpusError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut sentences = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sentence: Sentence =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        sentence.validate(schema).map_err(|e| match e {
            CorpusError::MalformedRecord { reason, .. } => CorpusError::MalformedRecord {
                line: idx + 1,
                reason,
            },
            other => other,
        })?;
        sentences.push(sentence);
    }
    Ok(sentences)
}

/// Writes sentences in the line-delimited corpus format.
pub fn save_corpus(path: &Path, sentences: &[Sentence]) -> Result<(), CorpusError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for s in sentences {
        let line = serde_json::to_string(s).expect("sentence serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> RelationSchema {
        RelationSchema::new(
            vec!["PER".into(), "ORG".into()],
            vec!["Work-For".into()],
            false,
        )
        .unwrap()
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_valid_sentence() {
        let f = write_lines(&[r#"{"id":"s1","language":"en","words":["Ann","joined","Acme"],"entities":[{"id":"e1","start":1,"end":1,"type":"PER"},{"id":"e2","start":3,"end":3,"type":"ORG"}],"relations":[{"arg1":"e1","arg2":"e2","type":"Work-For"}]}"#]);
        let sents = load_corpus(f.path(), &schema()).unwrap();
        assert_eq!(sents.len(), 1);
        assert_eq!(sents[0].entities.len(), 2);
        assert_eq!(sents[0].relations.len(), 1);
    }

    #[test]
    fn rejects_span_out_of_range() {
        let f = write_lines(&[r#"{"id":"s1","language":"en","words":["a","b"],"entities":[{"id":"e1","start":2,"end":1,"type":"PER"}],"relations":[]}"#]);
        let err = load_corpus(f.path(), &schema()).unwrap_err();
        assert!(matches!(err, CorpusError::SpanOutOfRange(_)));
    }

    #[test]
    fn rejects_unknown_relation_type() {
        let f = write_lines(&[r#"{"id":"s1","language":"en","words":["a","b"],"entities":[{"id":"e1","start":1,"end":1,"type":"PER"},{"id":"e2","start":2,"end":2,"type":"ORG"}],"relations":[{"arg1":"e1","arg2":"e2","type":"Foo"}]}"#]);
        let err = load_corpus(f.path(), &schema()).unwrap_err();
        match err {
            CorpusError::UnknownType(name) => assert_eq!(name, "Foo"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_json_with_line_number() {
        let f = write_lines(&[
            r#"{"id":"s1","language":"en","words":["a"],"entities":[],"relations":[]}"#,
            r#"{"id": oops"#,
        ]);
        let err = load_corpus(f.path(), &schema()).unwrap_err();
        match err {
            CorpusError::MalformedRecord { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn roundtrip_save_load() {
        let f = write_lines(&[r#"{"id":"s1","language":"en","words":["Ann","joined","Acme"],"entities":[{"id":"e1","start":1,"end":1,"type":"PER"}],"relations":[]}"#]);
        let sents = load_corpus(f.path(), &schema()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_corpus(out.path(), &sents).unwrap();
        let again = load_corpus(out.path(), &schema()).unwrap();
        assert_eq!(sents, again);
    }
}
