//! Chat-completion gateway: retries, token accounting, and record/replay.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod cassette;
mod http;
mod ledger;

pub use cassette::{fingerprint, Cassette, CassetteEntry, CassetteMode, CassetteTransport};
pub use http::{HttpConfig, HttpTransport, API_KEY_ENV};
pub use ledger::{cost_usd, Ledger, LedgerReport, PhaseTotals, Totals, DEFAULT_PRICE_PER_1K};

pub const DEFAULT_TEMPERATURE: f64 = 0.5;
pub const CONTEXT_WINDOW: usize = 4096;
pub const RESPONSE_SAFETY_MARGIN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_response_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: FinishReason,
    pub usage: Usage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Generation,
    Repair,
}

/// Who a call is made for, used for accounting and cassette annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallTag {
    pub method: String,
    pub phase: Phase,
}

impl CallTag {
    pub fn new(method: impl Into<String>, phase: Phase) -> Self {
        Self { method: method.into(), phase }
    }
}

/// Recorded usage of one successful call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub phase: Phase,
    pub cost_usd: f64,
}

/// Failure of a single transport call.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportFailure {
    #[error("the model is overloaded")]
    Overloaded,
    #[error("bad gateway")]
    BadGateway,
    #[error("server error")]
    ServerError,
    #[error("maximum capacity reached")]
    CapacityReached,
    #[error("request timed out")]
    Timeout,
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("no recorded response for request {0}")]
    CassetteMiss(String),
    #[error("{0}")]
    Fatal(String),
}

impl TransportFailure {
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            TransportFailure::Overloaded
                | TransportFailure::BadGateway
                | TransportFailure::ServerError
                | TransportFailure::CapacityReached
                | TransportFailure::Timeout
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} tries: {last}")]
    Transport { attempts: u32, last: TransportFailure },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("cassette has no response for request {fingerprint}")]
    CassetteMiss { fingerprint: String },
}

pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest, tag: &CallTag) -> Result<ChatResponse, TransportFailure>;
}

impl<F> Transport for F
where
    F: Fn(&ChatRequest, &CallTag) -> Result<ChatResponse, TransportFailure> + Send + Sync,
{
    fn send(&self, request: &ChatRequest, tag: &CallTag) -> Result<ChatResponse, TransportFailure> {
        self(request, tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    /// Relative jitter, 0.2 means each delay is scaled by a factor in [0.8, 1.2].
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay: Duration::from_secs(1), jitter: 0.2 }
    }
}

impl RetryPolicy {
    pub fn immediate(max_retries: u32) -> Self {
        Self { max_retries, base_delay: Duration::ZERO, jitter: 0.0 }
    }

    /// Delay before retry number `retry` (0-based): base, 2×base, 4×base...
    pub fn delay(&self, retry: u32) -> Duration {
        let nominal = self.base_delay.saturating_mul(1u32 << retry.min(16));
        if nominal.is_zero() || self.jitter <= 0.0 {
            return nominal;
        }
        let factor = rand::rng().random_range(1.0 - self.jitter..=1.0 + self.jitter);
        nominal.mul_f64(factor)
    }
}

/// Successful call result.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub response: ChatResponse,
    /// Transport tries used, 1 when the first try succeeded.
    pub attempts: u32,
    pub usage: TokenUsage,
}

struct InFlight {
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
        while self.limit > 0 && *busy >= self.limit {
            busy = self.freed.wait(busy).unwrap_or_else(|e| e.into_inner());
        }
        *busy += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.0.freed.notify_one();
    }
}

pub struct Gateway {
    transport: Box<dyn Transport>,
    policy: RetryPolicy,
    ledger: Ledger,
    in_flight: InFlight,
}

impl Gateway {
    pub fn new(transport: Box<dyn Transport>, policy: RetryPolicy, price_per_1k: f64) -> Self {
        Self {
            transport,
            policy,
            ledger: Ledger::new(price_per_1k),
            in_flight: InFlight { limit: 0, busy: Mutex::new(0), freed: Condvar::new() },
        }
    }

    /// Cap concurrent transport calls; 0 means unlimited.
    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.in_flight.limit = limit;
        self
    }

    pub fn complete(&self, request: &ChatRequest, tag: &CallTag) -> Result<Completion, GatewayError> {
        let mut tries = 0u32;
        loop {
            tries += 1;
            let result = {
                let _slot = self.in_flight.acquire();
                self.transport.send(request, tag)
            };
            match result {
                Ok(response) => {
                    let usage = self.ledger.record(tag, response.usage);
                    return Ok(Completion { response, attempts: tries, usage });
                }
                Err(TransportFailure::Auth(msg)) => return Err(GatewayError::Auth(msg)),
                Err(TransportFailure::CassetteMiss(fingerprint)) => {
                    return Err(GatewayError::CassetteMiss { fingerprint })
                }
                Err(failure) if failure.is_transient() && tries <= self.policy.max_retries => {
                    std::thread::sleep(self.policy.delay(tries - 1));
                }
                Err(last) => return Err(GatewayError::Transport { attempts: tries, last }),
            }
        }
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_report(&self) -> LedgerReport {
        self.ledger.report()
    }
}

/// Response budget left in the shared context window.
pub fn max_response_tokens(prompt_estimate: usize) -> usize {
    CONTEXT_WINDOW.saturating_sub(prompt_estimate).saturating_sub(RESPONSE_SAFETY_MARGIN).max(1)
}
