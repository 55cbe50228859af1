use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassRecord, InverseIndex, KbError, LibraryArtifact};

pub const INDEX_FORMAT: &str = "snippet-forge-kb";
pub const INDEX_VERSION: u32 = 1;

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    format: String,
    version: u32,
    artifacts: Vec<LibraryArtifact>,
    records: Vec<ClassRecord>,
}

/// Write the index as JSON with a format/version header.
pub fn save_index(idx: &InverseIndex, path: &Path) -> Result<(), KbError> {
    let stored = Stored {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        artifacts: idx.artifacts().cloned().collect(),
        records: idx.records().cloned().collect(),
    };
    let text = serde_json::to_string_pretty(&stored).expect("index serializes");
    fs::write(path, text).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_index(path: &Path) -> Result<InverseIndex, KbError> {
    let text = fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_index(&text)
}

pub(crate) fn parse_index(text: &str) -> Result<InverseIndex, KbError> {
    let header: Header = serde_json::from_str(text).map_err(|e| KbError::CorruptIndex(e.to_string()))?;
    if header.format != INDEX_FORMAT {
        return Err(KbError::CorruptIndex(format!("not an index file (format {:?})", header.format)));
    }
    if header.version != INDEX_VERSION {
        return Err(KbError::FormatVersionMismatch {
            found: header.version,
            expected: INDEX_VERSION,
        });
    }
    let stored: Stored = serde_json::from_str(text).map_err(|e| KbError::CorruptIndex(e.to_string()))?;
    InverseIndex::from_parts(stored.artifacts, stored.records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::ClassKind;
    use chrono::{TimeZone, Utc};

    fn sample() -> InverseIndex {
        let mut idx = InverseIndex::new();
        idx.add_artifact(
            LibraryArtifact {
                artifact_id: "joda-time-2.9.9".into(),
                archive_path: "/libs/joda-time-2.9.9.jar".into(),
                last_modified: Utc.with_ymd_and_hms(2017, 3, 23, 0, 0, 0).unwrap(),
            },
            vec![ClassRecord {
                fqn: "org.joda.time.Duration".into(),
                kind: ClassKind::Class,
                methods: ["getMillis".to_string()].into(),
                fields: ["ZERO".to_string()].into(),
                artifact_id: "joda-time-2.9.9".into(),
            }],
        );
        idx
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.json");
        for idx in [sample(), InverseIndex::new()] {
            save_index(&idx, &path).unwrap();
            assert_eq!(load_index(&path).unwrap(), idx);
        }
    }

    #[test]
    fn truncated_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.json");
        save_index(&sample(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_index(&path), Err(KbError::CorruptIndex(_))));
        assert!(matches!(parse_index("{\"format\":\"other\",\"version\":1}"), Err(KbError::CorruptIndex(_))));
    }

    #[test]
    fn version_mismatch() {
        let text = serde_json::json!({"format": INDEX_FORMAT, "version": 99, "artifacts": [], "records": []});
        assert!(matches!(
            parse_index(&text.to_string()),
            Err(KbError::FormatVersionMismatch { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn dangling_record_is_corrupt() {
        let text = serde_json::json!({
            "format": INDEX_FORMAT, "version": 1, "artifacts": [],
            "records": [{"fqn": "a.B", "kind": "Class", "methods": [], "fields": [], "artifact_id": "ghost"}]
        });
        assert!(matches!(parse_index(&text.to_string()), Err(KbError::CorruptIndex(_))));
    }
}
