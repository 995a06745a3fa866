use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_index, Candidates, PerturbError, ReplacementModel, Result};
use crate::corpus::Token;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub timeout_ms: u64,
    pub attempts: usize,
    /// Candidates requested per position.
    pub request_k: usize,
    pub max_connections: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080".to_string(),
            timeout_ms: 2000,
            attempts: 2,
            request_k: 16,
            max_connections: 8,
        }
    }
}

impl RemoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.attempts == 0 || self.request_k == 0 || self.timeout_ms == 0 {
            return Err(PerturbError::InvalidConfig(
                "remote attempts, request_k and timeout_ms must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Request<'a> {
    tokens: Vec<&'a str>,
    mask_index: usize,
    k: usize,
}

#[derive(Deserialize)]
struct Response {
    candidates: Vec<Entry>,
}

#[derive(Deserialize)]
struct Entry {
    word: String,
    weight: f64,
}

enum Failure {
    Retry(String),
    Fatal(PerturbError),
}

/// HTTP client for an external masked-language-model server.
pub struct RemoteReplacer {
    config: RemoteConfig,
    url: String,
    agent: ureq::Agent,
}

impl RemoteReplacer {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .max_idle_connections(config.max_connections)
            .max_idle_connections_per_host(config.max_connections)
            .build()
            .into();
        let url = format!("{}/v1/replacements", config.endpoint.trim_end_matches('/'));
        Ok(Self { config, url, agent })
    }

    fn protocol(&self, message: impl Into<String>) -> PerturbError {
        PerturbError::Protocol {
            endpoint: self.config.endpoint.clone(),
            message: message.into(),
        }
    }

    fn attempt(&self, body: &Request) -> Result<Vec<Entry>, Failure> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(body)
            .map_err(|e| Failure::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        if status >= 500 {
            return Err(Failure::Retry(format!("server answered {status}")));
        }
        if status != 200 {
            let detail = resp
                .body_mut()
                .read_json::<serde_json::Value>()
                .ok()
                .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_string))
                .unwrap_or_default();
            return Err(Failure::Fatal(self.protocol(format!("status {status} {detail}"))));
        }
        let parsed: Response = resp
            .body_mut()
            .read_json()
            .map_err(|e| Failure::Fatal(self.protocol(format!("malformed response: {e}"))))?;
        Ok(parsed.candidates)
    }

    /// Asks the server for `k` candidates for `tokens[i]`.
    pub fn request(&self, tokens: &[Token], i: usize, k: usize) -> Result<Candidates> {
        check_index(tokens, i)?;
        let body = Request {
            tokens: tokens.iter().map(Token::as_str).collect(),
            mask_index: i,
            k,
        };
        let mut last = String::new();
        let mut entries = None;
        for attempt in 1..=self.config.attempts {
            match self.attempt(&body) {
                Ok(e) => {
                    entries = Some(e);
                    break;
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => {
                    log::warn!("replacement request {attempt}/{} failed: {msg}", self.config.attempts);
                    last = msg;
                }
            }
        }
        let Some(entries) = entries else {
            return Err(PerturbError::Network {
                endpoint: self.config.endpoint.clone(),
                attempts: self.config.attempts,
                message: last,
            });
        };
        if entries.is_empty() {
            return Err(self.protocol("empty candidate list"));
        }
        if let Some(bad) = entries.iter().find(|e| !(e.weight > 0.0 && e.weight.is_finite())) {
            return Err(self.protocol(format!("non-positive weight {} for {:?}", bad.weight, bad.word)));
        }
        let masked = tokens[i].as_str();
        let mut merged = std::collections::BTreeMap::<Token, f64>::new();
        for e in entries.into_iter().filter(|e| e.word != masked) {
            *merged.entry(Token::new(&e.word)).or_default() += e.weight;
        }
        Candidates::normalized(merged.into_iter().collect(), None)
            .map_err(|_| self.protocol("no candidates left after removing the masked word"))
    }
}

impl ReplacementModel for RemoteReplacer {
    fn name(&self) -> String {
        format!("remote({})", self.config.endpoint)
    }

    fn support_size(&self, tokens: &[Token], i: usize) -> Result<usize> {
        check_index(tokens, i)?;
        Ok(self.config.request_k)
    }

    fn enumerate(&self, tokens: &[Token], i: usize) -> Result<Candidates> {
        self.request(tokens, i, self.config.request_k)
    }

    /// The server's weighted proposal list is used as is; no local draws.
    fn sample(&self, tokens: &[Token], i: usize, k: usize, _rng: &mut ChaCha8Rng) -> Result<Candidates> {
        self.request(tokens, i, k)
    }
}
