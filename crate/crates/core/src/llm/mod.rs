//! Model access: OpenAI-compatible HTTP or a deterministic offline mock,
//! behind a content-addressed response cache and a shared rate limiter.

mod cache;
mod http;
mod mock;
mod ratelimit;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use cache::{Cache, CacheEntry, CachedRequest, CachedResponse};
pub use http::{HttpBackend, RetryPolicy};
pub use mock::{MockBackend, MOCK_EMPTY_MARKER};
pub use ratelimit::RateLimiter;

pub const API_KEY_ENV: &str = "OPENAI_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-instruct";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiMode {
    #[default]
    Completion,
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub endpoint: String,
    pub api_mode: ApiMode,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::summarization()
    }
}

impl ModelParams {
    /// 128 output tokens, stop at a blank line.
    pub fn summarization() -> Self {
        ModelParams {
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_output_tokens: 128,
            stop_sequences: vec!["\n\n".to_string()],
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_mode: ApiMode::Completion,
        }
    }

    /// 64 output tokens and no stop sequence: the prompt ends mid-line, so
    /// the model usually opens with a newline. The first non-empty output
    /// line is taken client-side instead.
    pub fn completion() -> Self {
        ModelParams { max_output_tokens: 64, stop_sequences: Vec::new(), ..ModelParams::summarization() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    #[default]
    Unknown,
}

impl FinishReason {
    pub fn from_api(s: Option<&str>) -> Self {
        match s {
            Some("stop") => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            _ => FinishReason::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub cached: bool,
    pub request_hash: String,
    #[serde(skip)]
    pub latency: Duration,
}

/// What a backend returns before caching and validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub text: String,
    pub finish_reason: FinishReason,
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<RawCompletion>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    #[default]
    Mock,
}

/// SHA-256 over the canonical JSON of the prompt text and parameters.
/// Object keys are sorted, so the hash does not depend on field order.
pub fn request_hash(prompt: &str, params: &ModelParams) -> String {
    let value = serde_json::json!({ "prompt": prompt, "params": params });
    let canonical = serde_json::to_string(&value).expect("json values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// A backend with optional cache and rate limiter.
pub struct Client {
    backend: Box<dyn Backend>,
    cache: Option<Cache>,
    limiter: Option<RateLimiter>,
    backend_calls: AtomicUsize,
}

impl Client {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        Client { backend, cache: None, limiter: None, backend_calls: AtomicUsize::new(0) }
    }

    pub fn mock() -> Self {
        Client::new(Box::new(MockBackend))
    }

    pub fn with_cache(mut self, cache: Cache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_rate_limiter(mut self, limiter: RateLimiter) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    /// Requests that reached the backend (cache misses).
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::Relaxed)
    }

    /// One completion. Empty or all-whitespace output is
    /// [`Error::EmptyCompletion`], cached or not.
    pub fn complete(&self, prompt: &str, params: &ModelParams) -> Result<CompletionResult> {
        let start = Instant::now();
        let hash = request_hash(prompt, params);
        let cached = self.cache.as_ref().and_then(|c| c.lookup(&hash));
        let (raw, was_cached) = match cached {
            Some(entry) => {
                (RawCompletion { text: entry.response.text, finish_reason: entry.response.finish_reason }, true)
            }
            None => {
                if let Some(limiter) = &self.limiter {
                    limiter.acquire();
                }
                self.backend_calls.fetch_add(1, Ordering::Relaxed);
                let raw = self.backend.complete(prompt, params)?;
                if let Some(cache) = &self.cache {
                    cache.store(&hash, &CacheEntry::new(prompt, params, &raw))?;
                }
                (raw, false)
            }
        };
        if raw.text.trim().is_empty() {
            return Err(Error::EmptyCompletion);
        }
        Ok(CompletionResult {
            text: raw.text,
            finish_reason: raw.finish_reason,
            cached: was_cached,
            request_hash: hash,
            latency: start.elapsed(),
        })
    }
}

/// First non-empty line of a completion, trimmed.
pub fn first_line(text: &str) -> &str {
    text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("")
}
