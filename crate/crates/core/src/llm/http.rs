use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ApiMode, Backend, FinishReason, ModelParams, RawCompletion, API_KEY_ENV};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Up to this fraction of the delay is added at random.
    pub jitter: f64,
    pub timeout_secs: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 6, base_delay_ms: 1000, max_delay_ms: 60_000, jitter: 0.25, timeout_secs: 60 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt + 1`, without jitter.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.min(32)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }

    fn jittered(&self, attempt: u32) -> Duration {
        let base = self.backoff(attempt);
        let extra = rand::thread_rng().gen_range(0.0..=self.jitter.max(0.0));
        base.mul_f64(1.0 + extra)
    }
}

/// OpenAI-compatible `/completions` and `/chat/completions` client. The
/// API key, if any, comes from `OPENAI_API_KEY`.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(retry: RetryPolicy) -> Result<Self> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        HttpBackend::with_key(retry, api_key)
    }

    pub fn with_key(retry: RetryPolicy, api_key: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(retry.timeout_secs))
            .build()
            .map_err(|e| Error::Http(e.to_string()))?;
        Ok(HttpBackend { client, api_key, retry })
    }

    fn request_body(prompt: &str, params: &ModelParams) -> (String, Value) {
        let base = params.endpoint.trim_end_matches('/');
        let mut body = match params.api_mode {
            ApiMode::Completion => json!({
                "model": params.model_name,
                "prompt": prompt,
                "temperature": params.temperature,
                "max_tokens": params.max_output_tokens,
            }),
            ApiMode::Chat => json!({
                "model": params.model_name,
                "messages": [{ "role": "user", "content": prompt }],
                "temperature": params.temperature,
                "max_tokens": params.max_output_tokens,
            }),
        };
        if !params.stop_sequences.is_empty() {
            body["stop"] = json!(params.stop_sequences);
        }
        let url = match params.api_mode {
            ApiMode::Completion => format!("{base}/completions"),
            ApiMode::Chat => format!("{base}/chat/completions"),
        };
        (url, body)
    }

    fn parse_response(body: &Value, mode: ApiMode) -> Result<RawCompletion> {
        let choice =
            body.get("choices").and_then(|c| c.get(0)).ok_or_else(|| Error::Http("response has no choices".into()))?;
        let text = match mode {
            ApiMode::Completion => choice.get("text"),
            ApiMode::Chat => choice.get("message").and_then(|m| m.get("content")),
        }
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
        Ok(RawCompletion {
            text,
            finish_reason: FinishReason::from_api(choice.get("finish_reason").and_then(Value::as_str)),
        })
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &'static str {
        "http"
    }

    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<RawCompletion> {
        let (url, body) = Self::request_body(prompt, params);
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            let mut request = self.client.post(&url).json(&body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            let mut wait = None;
            match request.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let value: Value = resp.json().map_err(|e| Error::Http(format!("bad response body: {e}")))?;
                        return Self::parse_response(&value, params.api_mode);
                    }
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(Error::Authentication { status: status.as_u16() });
                    }
                    let retry_after = resp
                        .headers()
                        .get(reqwest::header::RETRY_AFTER)
                        .and_then(|v| v.to_str().ok())
                        .and_then(|v| v.trim().parse::<f64>().ok())
                        .map(Duration::from_secs_f64);
                    let text = resp.text().unwrap_or_default();
                    let snippet: String = text.chars().take(200).collect();
                    if status.as_u16() == 429 || status.is_server_error() {
                        last = format!("status {status}: {snippet}");
                        wait = retry_after;
                    } else {
                        return Err(Error::Http(format!("status {status}: {snippet}")));
                    }
                }
                Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => last = e.to_string(),
                Err(e) => return Err(Error::Http(e.to_string())),
            }
            if attempt + 1 < attempts {
                let delay = self.retry.jittered(attempt);
                let delay = wait.map_or(delay, |w| w.max(delay));
                log::debug!("attempt {} failed ({last}); retrying in {delay:?}", attempt + 1);
                std::thread::sleep(delay);
            }
        }
        Err(Error::RetriesExhausted { attempts, last })
    }
}
