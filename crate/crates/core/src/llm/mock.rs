//! Offline backends: echo, scripted replay, regex rules and fault injection.

use super::{estimate_tokens, Agent, BackendError, ChatBackend, ChatRequest, Completion};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

fn completion(req: &ChatRequest, text: String) -> Completion {
    Completion {
        prompt_tokens: estimate_tokens(&req.system_prompt) + estimate_tokens(&req.user_message),
        completion_tokens: estimate_tokens(&text),
        text,
    }
}

/// Returns the user message unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl ChatBackend for EchoBackend {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        Ok(completion(req, req.user_message.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum ScriptItem {
    Reply(String),
    Recorded { reply: Option<String>, error: Option<String> },
}

/// Replays replies in call order. Order-sensitive, so one consumer only.
#[derive(Debug)]
pub struct ScriptedBackend {
    replies: Vec<Result<String, String>>,
    next: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(replies: Vec<String>) -> Self {
        Self {
            replies: replies.into_iter().map(Ok).collect(),
            next: Mutex::new(0),
        }
    }

    /// Loads a JSON array of reply strings, or a transcript previously
    /// written by [`super::LlmClient::write_transcript`].
    pub fn from_file(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        let items: Vec<ScriptItem> = serde_json::from_str(&text).map_err(io::Error::other)?;
        let replies = items
            .into_iter()
            .map(|item| match item {
                ScriptItem::Reply(r) => Ok(r),
                ScriptItem::Recorded { reply: Some(r), .. } => Ok(r),
                ScriptItem::Recorded { error, .. } => Err(error.unwrap_or_else(|| "recorded failure".into())),
            })
            .collect();
        Ok(Self { replies, next: Mutex::new(0) })
    }

    pub fn remaining(&self) -> usize {
        self.replies.len() - *self.next.lock().unwrap()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        let mut next = self.next.lock().unwrap();
        let Some(item) = self.replies.get(*next) else {
            return Err(BackendError::ScriptExhausted(self.replies.len()));
        };
        *next += 1;
        match item {
            Ok(reply) => Ok(completion(req, reply.clone())),
            Err(e) => Err(BackendError::Fatal(e.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    /// Restrict the rule to one agent.
    #[serde(default)]
    pub agent: Option<Agent>,
    /// Regex searched in the user message.
    pub pattern: String,
    pub reply: String,
}

/// First matching rule wins; unmatched requests are echoed.
#[derive(Debug)]
pub struct RuleBackend {
    rules: Vec<(Option<Agent>, Regex, String)>,
}

impl RuleBackend {
    pub fn new(rules: &[MockRule]) -> Result<Self, regex::Error> {
        let rules = rules
            .iter()
            .map(|r| Ok((r.agent, Regex::new(&r.pattern)?, r.reply.clone())))
            .collect::<Result<_, regex::Error>>()?;
        Ok(Self { rules })
    }
}

impl ChatBackend for RuleBackend {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        let reply = self
            .rules
            .iter()
            .find(|(agent, re, _)| agent.is_none_or(|a| a == req.agent) && re.is_match(&req.user_message))
            .map_or_else(|| req.user_message.clone(), |(_, _, reply)| reply.clone());
        Ok(completion(req, reply))
    }
}

/// Fails the first `failures` calls with a simulated HTTP 429, then
/// delegates to `inner`.
pub struct FaultInjectingBackend {
    inner: Box<dyn ChatBackend>,
    failures: usize,
    seen: AtomicUsize,
}

impl FaultInjectingBackend {
    pub fn new(inner: Box<dyn ChatBackend>, failures: usize) -> Self {
        Self { inner, failures, seen: AtomicUsize::new(0) }
    }
}

impl ChatBackend for FaultInjectingBackend {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        if self.seen.fetch_add(1, Ordering::SeqCst) < self.failures {
            return Err(BackendError::Transient("HTTP 429 Too Many Requests".into()));
        }
        self.inner.complete(req)
    }
}
