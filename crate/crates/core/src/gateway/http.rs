//! OpenAI-compatible chat-completions transport.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CallTag, ChatRequest, ChatResponse, FinishReason, Transport, TransportFailure, Usage};

pub const API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: String,
    pub timeout: Duration,
}

pub struct HttpTransport {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Result<Self, TransportFailure> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| TransportFailure::Fatal(format!("cannot build http client: {e}")))?;
        Ok(Self { config, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Map an HTTP error status and body onto a failure class.
fn classify(status: u16, body: &str) -> TransportFailure {
    let lower = body.to_ascii_lowercase();
    match status {
        401 | 403 => TransportFailure::Auth(format!("status {status}")),
        408 | 504 => TransportFailure::Timeout,
        429 if lower.contains("capacity") => TransportFailure::CapacityReached,
        429 => TransportFailure::Overloaded,
        502 => TransportFailure::BadGateway,
        503 if lower.contains("capacity") => TransportFailure::CapacityReached,
        503 => TransportFailure::Overloaded,
        500..=599 => TransportFailure::ServerError,
        _ => TransportFailure::Fatal(format!("status {status}: {}", body.chars().take(200).collect::<String>())),
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest, _tag: &CallTag) -> Result<ChatResponse, TransportFailure> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_response_tokens,
        });
        let response = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportFailure::Timeout
                } else {
                    TransportFailure::ServerError
                }
            })?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|_| TransportFailure::ServerError)?;
        if !(200..300).contains(&status) {
            return Err(classify(status, &text));
        }
        let wire: WireResponse =
            serde_json::from_str(&text).map_err(|e| TransportFailure::Fatal(format!("bad response body: {e}")))?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| TransportFailure::Fatal("response has no choices".into()))?;
        let finish_reason = match choice.finish_reason.as_deref() {
            Some("length") => FinishReason::Length,
            Some("stop") | None => FinishReason::Stop,
            Some(_) => FinishReason::Error,
        };
        let usage = wire
            .usage
            .map(|u| Usage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens })
            .unwrap_or_default();
        Ok(ChatResponse { content: choice.message.content.unwrap_or_default(), finish_reason, usage })
    }
}
