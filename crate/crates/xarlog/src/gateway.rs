// SPDX-License-Identifier: Apache-2.0

//! Chat-completion client over an OpenAI-compatible HTTP endpoint or a
//! local stub table.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{BackendConfig, BackendKind};

pub const API_KEY_VAR: &str = "XARLOG_API_KEY";

const BACKOFF_BASE: Duration = Duration::from_secs(1);
const BACKOFF_FACTOR: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_name: String,
    pub messages: Vec<Message>,
    pub max_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: String,
    /// Seconds, including retries and backoff.
    pub latency: f64,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeFailure {
    pub kind: String,
    pub message: String,
    pub attempts: u32,
}

/// One `complete` call. Exactly one of `response` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub backend: String,
    pub request: ChatRequest,
    pub response: Option<ChatResponse>,
    pub error: Option<ExchangeFailure>,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("backend unavailable after {attempts} attempt(s): {last}")]
    BackendUnavailable { attempts: u32, last: String },
    #[error("authentication rejected (HTTP {status})")]
    AuthError { status: u16 },
    #[error("unexpected response (HTTP {status}): {detail}")]
    BadResponse { status: u16, detail: String },
    #[error("no stub response for key {key} and no default")]
    FixtureMiss { key: String },
    #[error("stub fixture: {0}")]
    Fixture(String),
}

impl GatewayError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::EmptyPrompt => "EmptyPrompt",
            Self::BackendUnavailable { .. } => "BackendUnavailable",
            Self::AuthError { .. } => "AuthError",
            Self::BadResponse { .. } => "BadResponse",
            Self::FixtureMiss { .. } => "FixtureMiss",
            Self::Fixture(_) => "Fixture",
        }
    }
}

/// A failed call, with the exchange that should still be recorded.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct GatewayFailure {
    pub error: GatewayError,
    pub exchange: Box<ChatExchange>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    /// POSTs a JSON body. `Err` means no HTTP status was received.
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration) -> Result<HttpReply, String>;
}

pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration) -> Result<HttpReply, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = bearer {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, d: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// First 16 hex digits of SHA-256 over the prompt bytes.
pub fn prompt_key(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Backoff cap before retry number `retry` (1-based): base * factor^(retry-1).
pub fn backoff_cap(retry: u32) -> Duration {
    BACKOFF_BASE.saturating_mul(BACKOFF_FACTOR.saturating_pow(retry.saturating_sub(1)))
}

pub struct Gateway {
    transport: Box<dyn Transport>,
    sleeper: Box<dyn Sleeper>,
    rng: Mutex<StdRng>,
    api_key: Option<String>,
}

impl Gateway {
    pub fn new(transport: Box<dyn Transport>, sleeper: Box<dyn Sleeper>, rng: StdRng, api_key: Option<String>) -> Self {
        Self {
            transport,
            sleeper,
            rng: Mutex::new(rng),
            api_key,
        }
    }

    /// Real HTTP, real sleeps, API key from `XARLOG_API_KEY`.
    pub fn from_env() -> Self {
        Self::new(
            Box::new(UreqTransport),
            Box::new(ThreadSleeper),
            StdRng::from_os_rng(),
            std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
        )
    }

    pub fn complete(&self, cfg: &BackendConfig, prompt: &str) -> Result<ChatExchange, GatewayFailure> {
        let request = ChatRequest {
            model_name: cfg.model_name.clone(),
            messages: vec![Message {
                role: "user".into(),
                content: prompt.into(),
            }],
            max_tokens: cfg.max_tokens,
            temperature: cfg.temperature,
        };
        let started = Instant::now();
        let (outcome, attempts) = if prompt.is_empty() {
            (Err(GatewayError::EmptyPrompt), 0)
        } else {
            match cfg.kind {
                BackendKind::Stub => (self.stub(cfg, prompt), 1),
                BackendKind::HttpChat => self.http(cfg, &request),
            }
        };
        let mut exchange = ChatExchange {
            backend: cfg.id.clone(),
            request,
            response: None,
            error: None,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        match outcome {
            Ok((content, finish_reason)) => {
                exchange.response = Some(ChatResponse {
                    content,
                    finish_reason,
                    latency: started.elapsed().as_secs_f64(),
                    attempts,
                });
                Ok(exchange)
            }
            Err(error) => {
                exchange.error = Some(ExchangeFailure {
                    kind: error.kind().into(),
                    message: error.to_string(),
                    attempts,
                });
                Err(GatewayFailure {
                    error,
                    exchange: Box::new(exchange),
                })
            }
        }
    }

    fn stub(&self, cfg: &BackendConfig, prompt: &str) -> Result<(String, String), GatewayError> {
        let path = cfg.fixture_path.as_ref().ok_or_else(|| GatewayError::Fixture("no fixture_path".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
        let table: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
        let key = prompt_key(prompt);
        let scoped = format!("{}:{key}", cfg.model_name);
        [scoped.as_str(), key.as_str(), "default"]
            .iter()
            .find_map(|k| table.get(*k))
            .map(|content| (content.clone(), "stop".to_string()))
            .ok_or(GatewayError::FixtureMiss { key })
    }

    fn http(&self, cfg: &BackendConfig, request: &ChatRequest) -> (Result<(String, String), GatewayError>, u32) {
        let url = cfg.endpoint_url.as_deref().unwrap_or_default();
        let body = WireRequest::from(request).to_json();
        let timeout = Duration::from_secs_f64(cfg.timeout);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let last = match self.transport.post_json(url, self.api_key.as_deref(), &body, timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => return (parse_reply(&reply), attempts),
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return (Err(GatewayError::AuthError { status: reply.status }), attempts)
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => format!("HTTP {}", reply.status),
                Ok(reply) => {
                    let detail: String = reply.body.chars().take(200).collect();
                    return (
                        Err(GatewayError::BadResponse {
                            status: reply.status,
                            detail,
                        }),
                        attempts,
                    );
                }
                Err(transport) => transport,
            };
            if attempts > cfg.max_retries {
                return (Err(GatewayError::BackendUnavailable { attempts, last }), attempts);
            }
            let cap = backoff_cap(attempts);
            let wait = {
                let mut rng = self.rng.lock().unwrap_or_else(|p| p.into_inner());
                cap.mul_f64(rng.random_range(0.0..=1.0))
            };
            self.sleeper.sleep(wait);
        }
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    max_tokens: u32,
    temperature: f64,
}

impl<'a> From<&'a ChatRequest> for WireRequest<'a> {
    fn from(r: &'a ChatRequest) -> Self {
        Self {
            model: &r.model_name,
            messages: r
                .messages
                .iter()
                .map(|m| WireMessage {
                    role: &m.role,
                    content: &m.content,
                })
                .collect(),
            max_tokens: r.max_tokens,
            temperature: r.temperature,
        }
    }
}

impl WireRequest<'_> {
    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

#[derive(Deserialize)]
struct WireReply {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReplyMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireReplyMessage {
    content: Option<String>,
}

fn parse_reply(reply: &HttpReply) -> Result<(String, String), GatewayError> {
    let bad = |detail: String| GatewayError::BadResponse {
        status: reply.status,
        detail,
    };
    let parsed: WireReply = serde_json::from_str(&reply.body).map_err(|e| bad(e.to_string()))?;
    let choice = parsed.choices.into_iter().next().ok_or_else(|| bad("no choices".into()))?;
    let content = choice.message.content.ok_or_else(|| bad("null content".into()))?;
    Ok((content, choice.finish_reason.unwrap_or_default()))
}
