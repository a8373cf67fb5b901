//! Blocking client for OpenAI-compatible endpoints.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use crate::wire::{parse_completion, CompletionRequest};
use crate::{CallContext, ChatRequest, ChatResponse, LlmError, LlmGateway};

/// Environment variable consulted when the recipe carries no key.
pub const API_KEY_ENV: &str = "YTWIN_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmEndpoint {
    pub base_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    pub model: String,
    /// Per-attempt timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff delay in milliseconds; doubles on every retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_concurrency() -> usize {
    8
}

impl LlmEndpoint {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            timeout: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            max_concurrency: default_concurrency(),
        }
    }

    /// Recipe convention: the literal string `NULL` means no authentication.
    pub fn with_recipe_key(mut self, key: &str) -> Self {
        self.api_key = match key.trim() {
            "" | "NULL" => std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            k => Some(k.to_string()),
        };
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let url = reqwest::Url::parse(&self.base_url).map_err(|e| format!("base_url {:?}: {e}", self.base_url))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(format!("base_url {:?} is not http(s)", self.base_url));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err("timeout must be positive".into());
        }
        if self.max_concurrency == 0 {
            return Err("max_concurrency must be at least 1".into());
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct HttpGateway {
    endpoint: LlmEndpoint,
    client: Client,
    permits: Permits,
}

enum Attempt {
    Done(ChatResponse),
    Retry(String),
    Fatal(LlmError),
}

impl HttpGateway {
    pub fn new(endpoint: LlmEndpoint) -> Result<Self, LlmError> {
        endpoint.validate().map_err(LlmError::InvalidEndpoint)?;
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout))
            .build()
            .map_err(|e| LlmError::InvalidEndpoint(e.to_string()))?;
        let permits = Permits {
            free: Mutex::new(endpoint.max_concurrency),
            cv: Condvar::new(),
        };
        Ok(Self {
            endpoint,
            client,
            permits,
        })
    }

    pub fn endpoint(&self) -> &LlmEndpoint {
        &self.endpoint
    }

    fn attempt(&self, body: &CompletionRequest) -> Attempt {
        let mut req = self.client.post(self.endpoint.completions_url()).json(body);
        if let Some(key) = &self.endpoint.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let bytes = match resp.bytes() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_success() {
            return match parse_completion(&bytes) {
                Ok(r) => Attempt::Done(r),
                Err(e) => Attempt::Fatal(e),
            };
        }
        let transient = status.is_server_error()
            || status == StatusCode::TOO_MANY_REQUESTS
            || status == StatusCode::REQUEST_TIMEOUT;
        let detail = format!("HTTP {status}: {}", String::from_utf8_lossy(&bytes));
        if transient {
            Attempt::Retry(detail)
        } else {
            Attempt::Fatal(LlmError::Rejected(detail))
        }
    }
}

impl LlmGateway for HttpGateway {
    fn complete(&self, req: &ChatRequest, _ctx: &CallContext) -> Result<ChatResponse, LlmError> {
        let model = if req.model.is_empty() {
            &self.endpoint.model
        } else {
            &req.model
        };
        let body = CompletionRequest::from_chat(req, model);
        let _permit = self.permits.acquire();
        let attempts = self.endpoint.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.endpoint.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(&body) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(why) => {
                    tracing::warn!(attempt = attempt + 1, %why, "llm call failed");
                    last = why;
                }
            }
        }
        Err(LlmError::EndpointUnavailable { attempts, last })
    }
}
