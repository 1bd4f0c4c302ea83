use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{CorpusError, Record};

/// Parses JSON Lines text, validating every record. Line numbers are 1-based.
pub fn parse_jsonl<T: Record>(text: &str) -> Result<Vec<T>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(out);
    }
    for (i, raw) in body.split('\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.is_empty() {
            return Err(CorpusError::MalformedLine {
                line,
                message: "empty line".into(),
            });
        }
        let record: T = serde_json::from_str(raw).map_err(|e| CorpusError::MalformedLine {
            line,
            message: e.to_string(),
        })?;
        if let Some(field) = record.violation() {
            return Err(CorpusError::SchemaViolation {
                line,
                field: field.to_string(),
            });
        }
        if let Some(key) = record.unique_key() {
            if !seen.insert(key.clone()) {
                return Err(CorpusError::DuplicateId { line, id: key });
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_jsonl<T: Record>(path: impl AsRef<Path>) -> Result<Vec<T>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    parse_jsonl(&text)
}

/// Renders records as JSON Lines, one record per LF-terminated line.
pub fn to_jsonl_string<T: serde::Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        // serializing plain data structs cannot fail
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: serde::Serialize>(
    records: &[T],
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::IoFailure {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    fs::write(path, to_jsonl_string(records)).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        Bill, PositionLabel, SponsorshipRecord, Statement, VoteDecision, VoteRecord,
    };

    fn statement(id: &str, text: &str) -> Statement {
        Statement {
            id: id.into(),
            speaker_id: "sp".into(),
            topic: "Abortion".into(),
            text: text.into(),
            position: None,
        }
    }

    #[test]
    fn empty_file_is_empty_list() {
        let v: Vec<Statement> = parse_jsonl("").unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn three_lines_in_order() {
        let recs = vec![
            statement("s1", "a"),
            statement("s2", "b"),
            statement("s3", "c"),
        ];
        let text = to_jsonl_string(&recs);
        assert_eq!(text.lines().count(), 3);
        let back: Vec<Statement> = parse_jsonl(&text).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn empty_text_is_a_schema_violation() {
        let line = r#"{"id":"s1","speaker_id":"x","topic":"t","text":"   "}"#;
        let err = parse_jsonl::<Statement>(line).unwrap_err();
        assert!(
            matches!(err, CorpusError::SchemaViolation { line: 1, ref field } if field == "text")
        );
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = to_jsonl_string(&[statement("s1", "a"), statement("s1", "b")]);
        let err = parse_jsonl::<Statement>(&text).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { line: 2, ref id } if id == "s1"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let line = r#"{"id":"s1","speaker_id":"x","topic":"t","text":"a","extra":1}"#;
        assert!(matches!(
            parse_jsonl::<Statement>(line),
            Err(CorpusError::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn blank_interior_line_is_malformed() {
        let text = format!(
            "{}\n\n",
            serde_json::to_string(&statement("s1", "a")).unwrap()
        );
        assert!(matches!(
            parse_jsonl::<Statement>(&text),
            Err(CorpusError::MalformedLine { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_votes_per_bill() {
        let v = VoteRecord {
            agent_id: "agent".into(),
            bill_id: "b1".into(),
            decision: VoteDecision::Cosponsor,
        };
        let text = to_jsonl_string(&[v.clone(), v]);
        assert!(matches!(
            parse_jsonl::<VoteRecord>(&text),
            Err(CorpusError::DuplicateId { .. })
        ));
    }

    #[test]
    fn sponsorship_duplicates_are_allowed() {
        let r = SponsorshipRecord {
            cosponsor_id: "a".into(),
            sponsor_id: "b".into(),
            bill_id: "x".into(),
        };
        let back: Vec<SponsorshipRecord> = parse_jsonl(&to_jsonl_string(&[r.clone(), r])).unwrap();
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn field_order_is_stable() {
        let s = Statement {
            position: Some(PositionLabel::RW),
            ..statement("s1", "text")
        };
        assert_eq!(
            to_jsonl_string(&[s]),
            "{\"id\":\"s1\",\"speaker_id\":\"sp\",\"topic\":\"Abortion\",\"text\":\"text\",\"position\":\"RW\"}\n"
        );
        let vote = VoteRecord {
            agent_id: "a".into(),
            bill_id: "b".into(),
            decision: VoteDecision::Cosponsor,
        };
        assert_eq!(
            to_jsonl_string(&[vote]),
            "{\"agent_id\":\"a\",\"bill_id\":\"b\",\"decision\":\"COSPONSOR\"}\n"
        );
    }

    #[test]
    fn bill_without_policy_area() {
        let b = Bill {
            id: "b1".into(),
            title: "t".into(),
            text: "x".into(),
            policy_area: "".into(),
            legislative_subjects: vec![],
            sponsor_id: "s".into(),
            sponsor_party: "D".into(),
        };
        let err = parse_jsonl::<Bill>(&to_jsonl_string(&[b])).unwrap_err();
        assert!(
            matches!(err, CorpusError::SchemaViolation { ref field, .. } if field == "policy_area")
        );
    }

    #[test]
    fn write_then_load_thousand_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/s.jsonl");
        let recs: Vec<Statement> = (0..1000)
            .map(|i| statement(&format!("s{i:04}"), "x"))
            .collect();
        write_jsonl(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1000);
        assert!(!text.contains('\r'));
        assert_eq!(load_jsonl::<Statement>(&path).unwrap(), recs);
    }

    #[test]
    fn empty_write_is_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        write_jsonl::<Statement>(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn missing_file_is_io_failure() {
        assert!(matches!(
            load_jsonl::<Statement>("/nonexistent/forge/x.jsonl"),
            Err(CorpusError::IoFailure { .. })
        ));
    }
}
