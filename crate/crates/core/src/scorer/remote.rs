//! HTTP client for an attention-exporter service.
//!
//! Wire format (JSON over HTTP):
//!
//! * `POST {endpoint}/score` with a [`WireRequest`], answered by a
//!   [`WireResponse`]. Offsets are zero-based byte offsets into each chunk's
//!   UTF-8 text; scores are 64-bit floats.
//! * `GET {endpoint}/health` and `GET {endpoint}/version`.
//! * Errors come back as a non-2xx status with `{"error": "..."}`.
//!
//! A version or encoding mismatch, or a span list count that differs from
//! the chunk count, is a hard protocol error. Server errors (5xx) and
//! connection failures are retried.

use std::collections::BTreeMap;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ScoredSpan;

use super::{ScoreRequest, ScoreResponse, Scorer};

pub const PROTOCOL_VERSION: &str = "r2c-score/1";
pub const TEXT_ENCODING: &str = "utf-8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub protocol_version: String,
    pub encoding: String,
    pub question: String,
    pub chunks: Vec<String>,
    pub backend: String,
    #[serde(default)]
    pub options: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub protocol_version: String,
    pub encoding: String,
    pub per_chunk: Vec<Vec<ScoredSpan>>,
    #[serde(default)]
    pub backend_meta: serde_json::Value,
}

impl WireRequest {
    pub fn from_request(request: &ScoreRequest) -> Self {
        WireRequest {
            protocol_version: PROTOCOL_VERSION.to_string(),
            encoding: TEXT_ENCODING.to_string(),
            question: request.question.clone(),
            chunks: request.chunks.clone(),
            backend: request.backend.clone(),
            options: request.options.clone(),
        }
    }
}

impl WireResponse {
    pub fn into_response(self) -> Result<ScoreResponse> {
        if self.protocol_version != PROTOCOL_VERSION {
            return Err(Error::protocol(format!(
                "protocol version mismatch: expected {PROTOCOL_VERSION}, got {}",
                self.protocol_version
            )));
        }
        if !self.encoding.eq_ignore_ascii_case(TEXT_ENCODING) {
            return Err(Error::protocol(format!("unsupported text encoding {}", self.encoding)));
        }
        Ok(ScoreResponse {
            per_chunk: self.per_chunk,
            backend_meta: self.backend_meta,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8765`.
    pub endpoint: String,
    pub timeout: Duration,
    /// Extra attempts after the first for retryable failures.
    pub max_retries: u32,
    pub retry_backoff: Duration,
    /// Upper bound on concurrent requests from this client.
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(60),
            max_retries: 2,
            retry_backoff: Duration::from_millis(200),
            max_in_flight: 4,
        }
    }
}

#[derive(Debug)]
struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.freed.notify_one();
    }
}

pub struct RemoteScorer {
    config: RemoteConfig,
    agent: ureq::Agent,
    permits: Permits,
}

impl std::fmt::Debug for RemoteScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteScorer").field("config", &self.config).finish()
    }
}

enum Attempt {
    Done(Result<ScoreResponse>),
    Retry(String),
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .new_agent();
        let permits = Permits {
            available: Mutex::new(config.max_in_flight.max(1)),
            freed: Condvar::new(),
        };
        RemoteScorer { config, agent, permits }
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.config.endpoint)
    }

    fn transport_error(&self, message: String, attempts: u32) -> Error {
        Error::Transport {
            endpoint: self.config.endpoint.clone(),
            message,
            attempts,
            retryable: true,
        }
    }

    pub fn health(&self) -> Result<()> {
        let resp = self
            .agent
            .get(&self.url("health"))
            .call()
            .map_err(|e| self.transport_error(e.to_string(), 1))?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(self.transport_error(format!("health check returned {}", resp.status()), 1))
        }
    }

    pub fn version(&self) -> Result<serde_json::Value> {
        let mut resp = self
            .agent
            .get(&self.url("version"))
            .call()
            .map_err(|e| self.transport_error(e.to_string(), 1))?;
        if !resp.status().is_success() {
            return Err(Error::protocol(format!("version endpoint returned {}", resp.status())));
        }
        resp.body_mut()
            .read_json()
            .map_err(|e| Error::protocol(format!("malformed version body: {e}")))
    }

    fn attempt(&self, body: &WireRequest) -> Attempt {
        let mut resp = match self.agent.post(&self.url("score")).send_json(body) {
            Ok(resp) => resp,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        if status.is_server_error() {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Attempt::Retry(format!("server returned {status}: {}", error_message(&text)));
        }
        if !status.is_success() {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Attempt::Done(Err(Error::protocol(format!(
                "scorer rejected request ({status}): {}",
                error_message(&text)
            ))));
        }
        let parsed = resp
            .body_mut()
            .read_json::<WireResponse>()
            .map_err(|e| Error::protocol(format!("malformed score response: {e}")))
            .and_then(WireResponse::into_response);
        Attempt::Done(parsed)
    }
}

fn error_message(body: &str) -> String {
    #[derive(Deserialize)]
    struct WireError {
        error: String,
    }
    serde_json::from_str::<WireError>(body)
        .map(|e| e.error)
        .unwrap_or_else(|_| body.chars().take(200).collect())
}

impl Scorer for RemoteScorer {
    fn name(&self) -> &str {
        "remote"
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let _permit = self.permits.acquire();
        let body = WireRequest::from_request(request);
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.attempt(&body) {
                Attempt::Done(result) => return result,
                Attempt::Retry(msg) => {
                    log::warn!("scorer attempt {attempt}/{attempts} failed: {msg}");
                    last = msg;
                    if attempt < attempts {
                        thread::sleep(self.config.retry_backoff * attempt);
                    }
                }
            }
        }
        Err(self.transport_error(last, attempts))
    }
}
