//! Chat-completion backends.
//!
//! [`LlmBackend`] is the one call the pipeline makes. [`LiveBackend`] talks to
//! an OpenAI-style HTTPS endpoint; [`MockBackend`] replays a scripted
//! transcript so that every pipeline test is deterministic. [`Metered`] wraps
//! either one with token/cost accounting and a spending ceiling.

mod extract;
mod live;
mod meter;
mod mock;
mod ratelimit;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_code_block, extract_import_statements, NoCodeFound};
pub use live::{LiveBackend, LiveConfig};
pub use meter::{Budget, Metered, PriceTable, TokenPrice, UsageRow, UsageTotals};
pub use mock::{MockBackend, TranscriptRecord};
pub use ratelimit::RateLimiter;

/// Defaults used when nothing else is configured.
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 256;
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-0125";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

/// Which prompt template produced a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    /// Import statement inference.
    Infer,
    /// Conversational error fixing.
    Fix,
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptKind::Infer => "infer",
            PromptKind::Fix => "fix",
        })
    }
}

/// Routing metadata carried alongside a request. It is never sent to a live
/// endpoint; the mock uses it to pick the scripted answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestTag {
    pub kind: PromptKind,
    pub snippet_id: String,
    /// 1-based: sample index for inference, conversation attempt for fixing.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub model_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tag: Option<RequestTag>,
}

impl CompletionRequest {
    pub fn new(messages: Vec<ChatMessage>, temperature: f64) -> Self {
        CompletionRequest {
            messages,
            temperature,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            model_id: DEFAULT_MODEL.to_string(),
            tag: None,
        }
    }

    pub fn with_tag(mut self, kind: PromptKind, snippet_id: &str, attempt: u32) -> Self {
        self.tag = Some(RequestTag {
            kind,
            snippet_id: snippet_id.to_string(),
            attempt,
        });
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("no messages".into()));
        }
        if self.messages.iter().any(|m| m.content.is_empty()) {
            return Err(LlmError::InvalidRequest("empty message content".into()));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Concatenated message text, used for token estimates.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned {status}: {body}")]
    Api { status: u16, body: String },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no scripted response left for {0}")]
    TranscriptExhausted(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A chat-completion service.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }
}

/// Rough token count: four characters per token, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

pub(crate) mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_validation() {
        let ok = CompletionRequest::new(vec![ChatMessage::user("hi")], 1.0);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.temperature = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.messages.clear();
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.messages.push(ChatMessage::assistant(""));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn token_estimate_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }
}
