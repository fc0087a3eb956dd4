//! OpenAI-compatible `/chat/completions` over blocking HTTP.

use super::{BackendError, ChatBackend, ChatRequest, Completion};
use serde::{Deserialize, Serialize};
use std::time::Duration;

pub struct OpenAiBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct Body<'a> {
    model: &'a str,
    messages: [Message<'a>; 2],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct Reply {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl OpenAiBackend {
    /// `endpoint` is either a base URL (`https://host/v1`) or the full
    /// `.../chat/completions` URL.
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent, url, api_key }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatBackend for OpenAiBackend {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        let body = Body {
            model: &req.model,
            messages: [
                Message { role: "system", content: &req.system_prompt },
                Message { role: "user", content: &req.user_message },
            ],
            temperature: req.temperature,
            max_tokens: req.max_new_tokens,
        };
        let mut request = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed => {
                BackendError::Transient(e.to_string())
            }
            other => BackendError::Fatal(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transient(format!("reading body: {e}")))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::Auth(format!("HTTP {status}: {text}"))),
            408 | 429 | 500..=599 => return Err(BackendError::Transient(format!("HTTP {status}: {text}"))),
            _ => return Err(BackendError::Fatal(format!("HTTP {status}: {text}"))),
        }
        let reply: Reply =
            serde_json::from_str(&text).map_err(|e| BackendError::Fatal(format!("malformed response: {e}")))?;
        let content = reply
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        let usage = reply.usage.unwrap_or(Usage { prompt_tokens: 0, completion_tokens: 0 });
        Ok(Completion {
            text: content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}
