//! Import statement inference with self-consistency voting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    extract_import_statements, ChatMessage, CompletionRequest, LlmBackend, LlmError, PromptKind,
    DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_MODEL,
};
use crate::prompts::{infer_instruction, PRESENTATION_GUIDE};
use crate::snippet::{CodeSnippet, ImportSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub k_samples: u32,
    pub temperature: f64,
    pub max_tiebreak_rounds: u32,
    pub max_output_tokens: u32,
    pub model_id: String,
    /// Samples of one round issued at the same time.
    pub concurrency: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            k_samples: 10,
            temperature: 1.0,
            max_tiebreak_rounds: 5,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            model_id: DEFAULT_MODEL.to_string(),
            concurrency: 1,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), InferError> {
        if self.k_samples == 0 {
            return Err(InferError::Config("k_samples must be at least 1".into()));
        }
        if self.max_tiebreak_rounds == 0 {
            return Err(InferError::Config("max_tiebreak_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum InferError {
    #[error("inference config: {0}")]
    Config(String),
    #[error("snippet {0} has an empty body")]
    EmptyBody(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

/// Votes for one distinct import set in the deciding round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub imports: ImportSet,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub chosen: ImportSet,
    /// Every extracted sample across all rounds, in request order.
    pub samples: Vec<ImportSet>,
    pub vote_count: u32,
    pub rounds_used: u32,
    /// Deciding-round tally, most votes first.
    pub tally: Vec<Vote>,
    /// True when the tie survived every round and the fallback picked.
    pub fallback: bool,
    /// Non-empty responses from which no import could be read.
    pub unrecognized: u32,
}

/// Prompt for one inference sample.
pub fn build_prompt_1(snippet: &CodeSnippet, cfg: &InferenceConfig) -> CompletionRequest {
    let text = format!(
        "{PRESENTATION_GUIDE}\n{}\n{}",
        infer_instruction(snippet.language),
        snippet.body
    );
    let mut req = CompletionRequest::new(vec![ChatMessage::user(text)], cfg.temperature);
    req.max_output_tokens = cfg.max_output_tokens;
    req.model_id = cfg.model_id.clone();
    req
}

struct Decision {
    winner: Option<(ImportSet, u32)>,
    tally: Vec<Vote>,
    tied: Vec<ImportSet>,
}

/// Count votes for one round. Sets are keyed by their canonical serialization.
fn decide(round: &[ImportSet]) -> Decision {
    let mut counts: BTreeMap<String, (ImportSet, u32)> = BTreeMap::new();
    for s in round {
        counts.entry(s.serialize()).or_insert_with(|| (s.clone(), 0)).1 += 1;
    }
    let max = counts.values().map(|(_, c)| *c).max().unwrap_or(0);
    // BTreeMap order keeps ties sorted by serialization
    let tied: Vec<ImportSet> = counts
        .values()
        .filter(|(_, c)| *c == max)
        .map(|(s, _)| s.clone())
        .collect();
    let mut tally: Vec<Vote> = counts
        .into_values()
        .map(|(imports, count)| Vote { imports, count })
        .collect();
    tally.sort_by(|a, b| b.count.cmp(&a.count));
    let winner = (tied.len() == 1).then(|| (tied[0].clone(), max));
    Decision { winner, tally, tied }
}

fn sample_round(
    snippet: &CodeSnippet,
    cfg: &InferenceConfig,
    backend: &dyn LlmBackend,
    round: u32,
) -> Result<Vec<(ImportSet, bool)>, LlmError> {
    let base = build_prompt_1(snippet, cfg);
    let one = |i: u32| -> Result<(ImportSet, bool), LlmError> {
        let attempt = (round - 1) * cfg.k_samples + i + 1;
        let req = base.clone().with_tag(PromptKind::Infer, &snippet.id, attempt);
        let resp = backend.complete(&req)?;
        let set = extract_import_statements(&resp.text, snippet.language);
        let unrecognized = set.is_empty() && !resp.text.trim().is_empty();
        Ok((set, unrecognized))
    };
    let workers = cfg.concurrency.max(1);
    if workers == 1 {
        return (0..cfg.k_samples).map(one).collect();
    }
    let mut out = Vec::with_capacity(cfg.k_samples as usize);
    let indices: Vec<u32> = (0..cfg.k_samples).collect();
    for chunk in indices.chunks(workers) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|&i| s.spawn(move || one(i))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampling thread panicked"))
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Sample the model `k_samples` times and keep the import set with the most
/// votes. A tie discards the round and samples again; after
/// `max_tiebreak_rounds` tied rounds the tied set with the smallest
/// serialization wins.
pub fn self_consistent_infer(
    snippet: &CodeSnippet,
    cfg: &InferenceConfig,
    backend: &dyn LlmBackend,
) -> Result<InferenceResult, InferError> {
    cfg.validate()?;
    if snippet.body.trim().is_empty() {
        return Err(InferError::EmptyBody(snippet.key()));
    }
    let mut samples = Vec::new();
    let mut unrecognized = 0;
    for round in 1..=cfg.max_tiebreak_rounds {
        let batch = sample_round(snippet, cfg, backend, round)?;
        let sets: Vec<ImportSet> = batch.iter().map(|(s, _)| s.clone()).collect();
        unrecognized += batch.iter().filter(|(_, u)| *u).count() as u32;
        samples.extend(sets.iter().cloned());
        let d = decide(&sets);
        if let Some((chosen, vote_count)) = d.winner {
            return Ok(InferenceResult {
                chosen,
                samples,
                vote_count,
                rounds_used: round,
                tally: d.tally,
                fallback: false,
                unrecognized,
            });
        }
        log::debug!("{}: round {round} tied between {} sets", snippet.key(), d.tied.len());
        if round == cfg.max_tiebreak_rounds {
            let chosen = d.tied[0].clone();
            let vote_count = d.tally[0].count;
            return Ok(InferenceResult {
                chosen,
                samples,
                vote_count,
                rounds_used: round,
                tally: d.tally,
                fallback: true,
                unrecognized,
            });
        }
    }
    unreachable!("max_tiebreak_rounds validated to be at least 1")
}
