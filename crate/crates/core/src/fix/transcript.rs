use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FixOutcome;
use crate::snippet::{CodeSnippet, Language};

/// Everything one fixing conversation produced, for later failure analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixTranscript {
    pub snippet: String,
    pub library: String,
    pub language: Language,
    pub input_code: String,
    #[serde(flatten)]
    pub outcome: FixOutcome,
}

/// `<dir>/<library>/<id>.json`
pub fn transcript_path(dir: &Path, snippet: &CodeSnippet) -> PathBuf {
    dir.join(&snippet.library_label).join(format!("{}.json", snippet.id))
}

pub fn write_transcript(dir: &Path, snippet: &CodeSnippet, input_code: &str, outcome: &FixOutcome) -> io::Result<PathBuf> {
    let path = transcript_path(dir, snippet);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let t = FixTranscript {
        snippet: snippet.id.clone(),
        library: snippet.library_label.clone(),
        language: snippet.language,
        input_code: input_code.to_string(),
        outcome: outcome.clone(),
    };
    let text = serde_json::to_string_pretty(&t).map_err(io::Error::other)?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

pub fn read_transcript(path: &Path) -> io::Result<FixTranscript> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fix::tests::FakeValidator;
    use crate::fix::{fix, FixConfig};
    use crate::llm::{MockBackend, PromptKind, TranscriptRecord};

    #[test]
    fn round_trip() {
        let v = FakeValidator::new(&["import x.Foo;"]);
        let body = "class A { Foo f; }\n";
        let s = CodeSnippet::new("s9", Language::Java, "gwt", body, None);
        let mock = MockBackend::new(vec![TranscriptRecord::new(
            PromptKind::Fix,
            "s9",
            None,
            format!("```java\nimport x.Foo;\n{body}```"),
        )]);
        let out = fix(body, &s, &FixConfig::default(), &mock, &v, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = write_transcript(dir.path(), &s, body, &out).unwrap();
        assert!(p.ends_with("gwt/s9.json"));
        let back = read_transcript(&p).unwrap();
        assert_eq!(back.outcome, out);
        assert_eq!(back.input_code, body);
    }
}
