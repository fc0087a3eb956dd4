//! Chat-completion client: one request shape, pluggable backends, retries,
//! usage accounting and a persisted transcript.

mod http;
mod ledger;
mod mock;

pub use http::OpenAiBackend;
pub use ledger::{CallUsage, Prices, UsageLedger, UsageTotals};
pub use mock::{EchoBackend, FaultInjectingBackend, MockRule, RuleBackend, ScriptedBackend};

use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;
use thiserror::Error;

/// Which agent issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Translator,
    Corrector,
    Validator,
    Filter,
    Terminology,
    Summarizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub agent: Agent,
    pub system_prompt: String,
    pub user_message: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Failure reported by a backend for a single attempt.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// 429, 5xx, timeouts, connection resets.
    #[error("transient: {0}")]
    Transient(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("scripted transcript exhausted after {0} replies")]
    ScriptExhausted(usize),
    #[error("{0}")]
    Fatal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetryBudgetExhausted { attempts: u32, last: BackendError },
    #[error("model returned an empty completion")]
    EmptyCompletion,
    #[error("scripted transcript exhausted after {0} replies")]
    ScriptExhausted(usize),
    #[error("backend error: {0}")]
    Backend(String),
}

/// A source of completions. Implementations must tolerate concurrent calls.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 4,
            initial_backoff_ms: 1000,
            max_backoff_ms: 30_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.multiplier.powi(retry as i32);
        Duration::from_millis(ms.min(self.max_backoff_ms as f64) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub agent: Agent,
    pub system_prompt: String,
    pub user_message: String,
    pub reply: Option<String>,
    pub error: Option<String>,
}

pub struct LlmClient {
    backend: Box<dyn ChatBackend>,
    retry: RetryPolicy,
    prices: Prices,
    ledger: Mutex<UsageLedger>,
    transcript: Mutex<Vec<TranscriptEntry>>,
}

impl LlmClient {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Self {
            backend,
            retry: RetryPolicy::default(),
            prices: Prices::default(),
            ledger: Mutex::new(UsageLedger::default()),
            transcript: Mutex::new(Vec::new()),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_prices(mut self, prices: Prices) -> Self {
        self.prices = prices;
        self
    }

    pub fn echo() -> Self {
        Self::new(Box::new(EchoBackend))
    }

    /// Sends `req`, retrying transient failures with exponential backoff.
    pub fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let mut attempt = 0;
        let result = loop {
            match self.backend.complete(req) {
                Ok(c) => break Ok(c),
                Err(BackendError::Transient(msg)) if attempt < self.retry.max_retries => {
                    let wait = self.retry.backoff(attempt);
                    log::info!("{:?} request failed ({msg}); retrying in {wait:?}", req.agent);
                    thread::sleep(wait);
                    attempt += 1;
                }
                Err(e @ BackendError::Transient(_)) => {
                    break Err(LlmError::RetryBudgetExhausted { attempts: attempt + 1, last: e })
                }
                Err(BackendError::Auth(msg)) => break Err(LlmError::Auth(msg)),
                Err(BackendError::ScriptExhausted(n)) => break Err(LlmError::ScriptExhausted(n)),
                Err(BackendError::Fatal(msg)) => break Err(LlmError::Backend(msg)),
            }
        };
        let result = result.and_then(|c| {
            self.ledger.lock().unwrap().record(req.agent, c.prompt_tokens, c.completion_tokens, &self.prices);
            if c.text.trim().is_empty() {
                Err(LlmError::EmptyCompletion)
            } else {
                Ok(c.text)
            }
        });
        let mut transcript = self.transcript.lock().unwrap();
        let index = transcript.len();
        transcript.push(TranscriptEntry {
            index,
            agent: req.agent,
            system_prompt: req.system_prompt.clone(),
            user_message: req.user_message.clone(),
            reply: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(ToString::to_string),
        });
        result
    }

    pub fn ledger(&self) -> UsageLedger {
        self.ledger.lock().unwrap().clone()
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.transcript.lock().unwrap().len()
    }

    pub fn write_transcript(&self, path: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(&*self.transcript.lock().unwrap()).map_err(io::Error::other)?;
        fs::write(path, json + "\n")
    }
}

/// Rough token estimate for backends that do not report usage.
pub fn estimate_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn req(user: &str) -> ChatRequest {
        ChatRequest {
            agent: Agent::Translator,
            system_prompt: "sys".into(),
            user_message: user.into(),
            temperature: 0.7,
            max_new_tokens: 8192,
            model: "mock".into(),
        }
    }

    fn fast() -> RetryPolicy {
        RetryPolicy { max_retries: 3, initial_backoff_ms: 0, max_backoff_ms: 0, multiplier: 2.0 }
    }

    #[test]
    fn echo_returns_user_message() {
        let client = LlmClient::echo();
        assert_eq!(client.chat(&req("hello world")).unwrap(), "hello world");
        assert_eq!(client.ledger().calls.len(), 1);
        assert_eq!(client.transcript()[0].reply.as_deref(), Some("hello world"));
    }

    #[test]
    fn two_429s_then_success() {
        let inner = ScriptedBackend::new(vec!["ok".into()]);
        let backend = FaultInjectingBackend::new(Box::new(inner), 2);
        let client = LlmClient::new(Box::new(backend)).with_retry(fast());
        assert_eq!(client.chat(&req("x")).unwrap(), "ok");
        assert_eq!(client.ledger().calls.len(), 1);
    }

    #[test]
    fn retry_budget_exhausted_carries_last_error() {
        let backend = FaultInjectingBackend::new(Box::new(EchoBackend), 10);
        let client = LlmClient::new(Box::new(backend)).with_retry(fast());
        match client.chat(&req("x")) {
            Err(LlmError::RetryBudgetExhausted { attempts, last }) => {
                assert_eq!(attempts, 4);
                assert!(matches!(last, BackendError::Transient(_)));
            }
            other => panic!("{other:?}"),
        }
        assert!(client.ledger().calls.is_empty());
    }

    #[test]
    fn empty_completion_is_an_error() {
        let client = LlmClient::new(Box::new(ScriptedBackend::new(vec!["  \n".into()])));
        assert_eq!(client.chat(&req("x")), Err(LlmError::EmptyCompletion));
    }

    #[test]
    fn backoff_grows_and_caps() {
        let p = RetryPolicy { max_retries: 5, initial_backoff_ms: 100, max_backoff_ms: 350, multiplier: 2.0 };
        let waits: Vec<u64> = (0..4).map(|i| p.backoff(i).as_millis() as u64).collect();
        assert_eq!(waits, vec![100, 200, 350, 350]);
    }
}
