//! Chat-completion HTTP client with retries.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::AnnotateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding a bearer token; no auth header if unset.
    pub auth_env: Option<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: Option<u32>,
    /// Whether the provider accepts `top_k`; when false it is dropped.
    pub supports_top_k: bool,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    /// JSON pointer to the completion text inside the response body.
    pub response_pointer: String,
    pub max_in_flight: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            auth_env: None,
            temperature: 0.2,
            top_p: 0.4,
            top_k: Some(8),
            supports_top_k: false,
            max_retries: 3,
            timeout_secs: 60,
            backoff_ms: 500,
            response_pointer: "/choices/0/message/content".into(),
            max_in_flight: 4,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        let bad = |m: String| Err(AnnotateError::Config(m));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        if self.endpoint.is_empty() {
            return bad("endpoint is empty".into());
        }
        Ok(())
    }

    fn request_body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "top_p": self.top_p,
        });
        if let Some(k) = self.top_k {
            if self.supports_top_k {
                body["top_k"] = json!(k);
            } else {
                log::warn!("top_k={k} dropped: provider configured without top_k support");
            }
        }
        body
    }
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// Sends one prompt and returns the completion text.
pub fn request_annotation(
    prompt: &str,
    config: &LlmConfig,
    cluster_id: usize,
) -> Result<String, AnnotateError> {
    config.validate()?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
        .build()
        .into();
    let token = match &config.auth_env {
        Some(var) => Some(std::env::var(var).map_err(|_| {
            AnnotateError::Config(format!("environment variable {var} is not set"))
        })?),
        None => None,
    };
    let body = config.request_body(prompt);
    let mut attempt = 0;
    loop {
        log::info!("cluster {cluster_id}: request attempt {}", attempt + 1);
        let mut req = agent.post(&config.endpoint);
        if let Some(t) = &token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let outcome = req.send_json(&body).and_then(|mut resp| {
            let status = resp.status().as_u16();
            resp.body_mut().read_to_string().map(|text| (status, text))
        });
        let retry_reason = match outcome {
            Ok((status, text)) if (200..300).contains(&status) => {
                log::info!("cluster {cluster_id}: response {status}, {} bytes", text.len());
                return extract_completion(&text, &config.response_pointer);
            }
            Ok((status, _)) if retryable_status(status) && attempt < config.max_retries => {
                log::warn!("cluster {cluster_id}: status {status}, will retry");
                format!("status {status}")
            }
            Ok((status, text)) => {
                return Err(AnnotateError::Api {
                    status,
                    body: text.chars().take(500).collect(),
                })
            }
            Err(e) if attempt < config.max_retries => {
                log::warn!("cluster {cluster_id}: transport error {e}, will retry");
                e.to_string()
            }
            Err(e) => return Err(AnnotateError::Transport(e.to_string())),
        };
        let delay = config.backoff_ms.saturating_mul(1 << attempt.min(16));
        log::debug!("cluster {cluster_id}: backing off {delay} ms after {retry_reason}");
        thread::sleep(Duration::from_millis(delay));
        attempt += 1;
    }
}

fn extract_completion(body: &str, pointer: &str) -> Result<String, AnnotateError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| AnnotateError::Response(format!("response is not JSON: {e}")))?;
    v.pointer(pointer)
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| AnnotateError::Response(format!("no string at {pointer} in response")))
}

/// Runs `work` over every item with at most `max_in_flight` calls at once.
/// Results come back in input order regardless of completion order.
pub fn run_bounded<T, R, F>(items: &[T], max_in_flight: usize, work: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|s| {
        for _ in 0..max_in_flight.max(1).min(items.len().max(1)) {
            let tx = tx.clone();
            let (next, work) = (&next, &work);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                if tx.send((i, work(item))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut out: Vec<(usize, R)> = rx.into_iter().collect();
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, r)| r).collect()
}
