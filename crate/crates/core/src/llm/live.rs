use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CompletionRequest, CompletionResponse, LlmBackend, LlmError, RateLimiter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub api_key: String,
    pub max_attempts: u32,
    /// First retry delay; doubles per attempt up to `backoff_max`.
    #[serde(with = "super::duration_ms")]
    pub backoff_base: Duration,
    #[serde(with = "super::duration_ms")]
    pub backoff_max: Duration,
    #[serde(with = "super::duration_ms")]
    pub request_timeout: Duration,
    pub max_in_flight: usize,
    pub requests_per_minute: Option<u32>,
    pub top_p: f64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key: String::new(),
            max_attempts: 5,
            backoff_base: Duration::from_millis(500),
            backoff_max: Duration::from_secs(16),
            request_timeout: Duration::from_secs(120),
            max_in_flight: 1,
            requests_per_minute: None,
            top_p: 1.0,
        }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

#[derive(Deserialize)]
struct ApiResponse {
    choices: Vec<ApiChoice>,
    #[serde(default)]
    usage: Option<ApiUsage>,
}

#[derive(Deserialize)]
struct ApiChoice {
    message: ApiMessage,
}

#[derive(Deserialize)]
struct ApiMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ApiUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

enum Attempt {
    Done(CompletionResponse),
    Retry(String),
    Fatal(LlmError),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        if config.max_attempts == 0 {
            return Err(LlmError::Config("max_attempts must be at least 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let limiter = RateLimiter::new(config.max_in_flight, config.requests_per_minute);
        Ok(LiveBackend {
            config,
            client,
            limiter,
        })
    }

    fn body(&self, request: &CompletionRequest) -> serde_json::Value {
        let messages: Vec<_> = request
            .messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        json!({
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "top_p": self.config.top_p,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let _permit = self.limiter.acquire();
        let started = Instant::now();
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .header("content-type", "application/json")
            .body(body.to_string());
        if !self.config.api_key.is_empty() {
            req = req.bearer_auth(&self.config.api_key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(LlmError::Api {
                status: status.as_u16(),
                body: text,
            });
        }
        let parsed: ApiResponse = match serde_json::from_str(&text) {
            Ok(p) => p,
            Err(e) => return Attempt::Retry(format!("malformed response: {e}")),
        };
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        let usage = parsed.usage.unwrap_or(ApiUsage {
            prompt_tokens: 0,
            completion_tokens: 0,
        });
        Attempt::Done(CompletionResponse {
            text: content,
            prompt_tokens: usage.prompt_tokens,
            output_tokens: usage.completion_tokens,
            latency: started.elapsed(),
        })
    }
}

impl LlmBackend for LiveBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let body = self.body(request);
        let mut delay = self.config.backoff_base;
        let mut last = String::new();
        for attempt in 1..=self.config.max_attempts {
            match self.attempt(&body) {
                Attempt::Done(r) => {
                    debug!("completion in {:?} ({} + {} tokens)", r.latency, r.prompt_tokens, r.output_tokens);
                    return Ok(r);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => {
                    warn!("attempt {attempt}/{} failed: {msg}", self.config.max_attempts);
                    last = msg;
                    if attempt < self.config.max_attempts {
                        std::thread::sleep(delay);
                        delay = (delay * 2).min(self.config.backoff_max);
                    }
                }
            }
        }
        Err(LlmError::Transport {
            attempts: self.config.max_attempts,
            message: last,
        })
    }
}
