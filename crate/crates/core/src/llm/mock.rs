use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    estimate_tokens, CompletionRequest, CompletionResponse, LlmBackend, LlmError, PromptKind,
    RequestTag,
};

/// One scripted answer.
///
/// Matcher fields left out match anything. In a transcript file each record
/// is one JSON object per line:
///
/// ```text
/// {"kind":"infer","snippet":"joda_1","attempt":3,"response":"import org.joda.time.Duration;"}
/// {"kind":"fix","snippet":"joda_1","response":"...","reusable":true}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PromptKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    pub response: String,
    /// A reusable record is never consumed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reusable: bool,
}

impl TranscriptRecord {
    pub fn new(kind: PromptKind, snippet: &str, attempt: Option<u32>, response: impl Into<String>) -> Self {
        TranscriptRecord {
            kind: Some(kind),
            snippet: Some(snippet.to_string()),
            attempt,
            response: response.into(),
            reusable: false,
        }
    }

    pub fn reusable(mut self) -> Self {
        self.reusable = true;
        self
    }

    /// `None` if the record cannot answer `tag`; otherwise a specificity score
    /// (higher wins).
    fn specificity(&self, tag: &RequestTag) -> Option<u8> {
        let mut score = 0;
        if let Some(k) = self.kind {
            if k != tag.kind {
                return None;
            }
            score += 1;
        }
        if let Some(s) = &self.snippet {
            if *s != tag.snippet_id {
                return None;
            }
            score += 2;
        }
        if let Some(a) = self.attempt {
            if a != tag.attempt {
                return None;
            }
            score += 4;
        }
        Some(score)
    }
}

struct Playback {
    records: Vec<TranscriptRecord>,
    consumed: Vec<bool>,
    cursor: usize,
}

/// Replays scripted responses keyed on (prompt kind, snippet id, attempt).
///
/// The most specific unconsumed record wins; among equally specific records
/// the earliest in the transcript wins. Untagged requests take the first
/// unconsumed record. Given the same request sequence the answers are
/// identical.
pub struct MockBackend {
    state: Mutex<Playback>,
    calls: AtomicU64,
}

impl MockBackend {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        let consumed = vec![false; records.len()];
        MockBackend {
            state: Mutex::new(Playback {
                records,
                consumed,
                cursor: 0,
            }),
            calls: AtomicU64::new(0),
        }
    }

    /// Parse a line-delimited transcript. Blank lines are skipped.
    pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptRecord>, LlmError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| LlmError::Config(format!("transcript line {}: {e}", i + 1)))
            })
            .collect()
    }

    pub fn from_path(path: &Path) -> Result<Self, LlmError> {
        let text = fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("reading {}: {e}", path.display())))?;
        Ok(Self::new(Self::parse_transcript(&text)?))
    }

    /// Render records in the transcript file format.
    pub fn render_transcript(records: &[TranscriptRecord]) -> String {
        records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    /// Number of `complete` calls made so far, successful or not.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Number of responses served.
    pub fn cursor(&self) -> usize {
        self.state.lock().expect("mock state poisoned").cursor
    }

    /// Records that are neither consumed nor reusable.
    pub fn remaining(&self) -> usize {
        let st = self.state.lock().expect("mock state poisoned");
        st.records
            .iter()
            .zip(&st.consumed)
            .filter(|(r, c)| !**c && !r.reusable)
            .count()
    }
}

impl LlmBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        request.validate()?;
        let mut st = self.state.lock().expect("mock state poisoned");
        let pick = match &request.tag {
            Some(tag) => {
                let mut best: Option<(usize, u8)> = None;
                for (i, rec) in st.records.iter().enumerate() {
                    if st.consumed[i] {
                        continue;
                    }
                    if let Some(score) = rec.specificity(tag) {
                        if best.is_none_or(|(_, b)| score > b) {
                            best = Some((i, score));
                        }
                    }
                }
                best.map(|(i, _)| i)
            }
            None => (0..st.records.len()).find(|&i| !st.consumed[i]),
        };
        let Some(i) = pick else {
            let what = match &request.tag {
                Some(t) => format!("{} {} attempt {}", t.kind, t.snippet_id, t.attempt),
                None => "untagged request".to_string(),
            };
            return Err(LlmError::TranscriptExhausted(what));
        };
        if !st.records[i].reusable {
            st.consumed[i] = true;
        }
        st.cursor += 1;
        let text = st.records[i].response.clone();
        Ok(CompletionResponse {
            prompt_tokens: estimate_tokens(&request.prompt_text()),
            output_tokens: estimate_tokens(&text),
            text,
            latency: Duration::ZERO,
        })
    }
}
