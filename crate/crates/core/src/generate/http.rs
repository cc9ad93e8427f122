//! Client for OpenAI-completions-compatible generation servers.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::quota::GenerationParams;
use super::GenerationBackend;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpBackendConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the API key. The key itself
    /// is never stored in configuration.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: usize,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            url: "http://127.0.0.1:8000/v1/completions".into(),
            model: "opt-1.3b".into(),
            api_key_env: Some("HSAUG_API_KEY".into()),
            timeout_secs: 60,
            max_retries: 4,
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
            max_in_flight: 4,
        }
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: usize,
    top_p: f64,
    n: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    text: String,
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    permits: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(n: usize) -> Self {
        InFlight {
            permits: Mutex::new(n.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut p = self.permits.lock().expect("semaphore poisoned");
        while *p == 0 {
            p = self.freed.wait(p).expect("semaphore poisoned");
        }
        *p -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().expect("semaphore poisoned") += 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    in_flight: InFlight,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let in_flight = InFlight::new(config.max_in_flight);
        HttpBackend {
            config,
            api_key,
            agent,
            in_flight,
        }
    }

    fn backoff(&self, attempt: usize) -> Duration {
        let ms = self
            .config
            .initial_backoff_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.config.max_backoff_ms);
        Duration::from_millis(ms)
    }

    fn attempt(&self, body: &CompletionRequest<'_>) -> std::result::Result<Vec<String>, Attempt> {
        let _permit = self.in_flight.acquire();
        let mut request = self.agent.post(&self.config.url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| Attempt::Retry(format!("transport: {e}")))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if status >= 400 {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(format!("HTTP {status}: {detail}")));
        }
        let parsed: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(format!("malformed completion response: {e}")))?;
        Ok(parsed.choices.into_iter().map(|c| c.text).collect())
    }
}

impl GenerationBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn generate(&self, prompt: &str, params: &GenerationParams, count: usize, seed: u64) -> Result<Vec<String>> {
        let body = CompletionRequest {
            model: &self.config.model,
            prompt,
            max_tokens: params.max_tokens,
            top_p: params.top_p,
            n: count,
            seed,
        };
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(texts) => return Ok(texts),
                Err(Attempt::Fatal(msg)) => return Err(Error::Backend(msg)),
                Err(Attempt::Retry(msg)) if attempt >= self.config.max_retries => {
                    return Err(Error::Backend(format!("{msg} (after {} retries)", attempt)));
                }
                Err(Attempt::Retry(msg)) => {
                    let wait = self.backoff(attempt);
                    log::debug!("retrying completion request in {wait:?}: {msg}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
            }
        }
    }
}
