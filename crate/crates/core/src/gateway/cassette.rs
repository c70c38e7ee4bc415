//! Record/replay of chat completions as line-delimited JSON.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{CallTag, ChatMessage, ChatRequest, ChatResponse, Phase, Transport, TransportFailure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CassetteMode {
    Record,
    Replay,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub method: String,
    pub phase: Phase,
    pub request: ChatRequest,
    pub response: ChatResponse,
}

#[derive(Debug, Error)]
pub enum CassetteError {
    #[error("cannot open cassette {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cassette {path} line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

/// SHA-256 over the canonical JSON of model, temperature and messages.
pub fn fingerprint(request: &ChatRequest) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        model: &'a str,
        temperature: f64,
        messages: &'a [ChatMessage],
    }
    let canonical = Canonical { model: &request.model, temperature: request.temperature, messages: &request.messages };
    let bytes = serde_json::to_vec(&canonical).expect("request serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, CassetteError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| CassetteError::Io { path: name.clone(), source })?;
        Self::parse(&text, &name)
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CassetteError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(line).map_err(|e| CassetteError::Parse {
                path: origin.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }
}

enum Backend {
    Replay(Mutex<HashMap<String, VecDeque<ChatResponse>>>),
    Record { inner: Box<dyn Transport>, out: Mutex<BufWriter<File>> },
    Live(Box<dyn Transport>),
}

/// A transport that replays, records, or passes calls straight through.
pub struct CassetteTransport {
    backend: Backend,
}

impl CassetteTransport {
    pub fn replay(cassette: Cassette) -> Self {
        let mut queues: HashMap<String, VecDeque<ChatResponse>> = HashMap::new();
        for e in cassette.entries {
            queues.entry(e.fingerprint).or_default().push_back(e.response);
        }
        Self { backend: Backend::Replay(Mutex::new(queues)) }
    }

    /// Forward calls to `inner` and append each success to `path`, which is truncated first.
    pub fn record(path: &Path, inner: Box<dyn Transport>) -> Result<Self, CassetteError> {
        let file = File::create(path).map_err(|source| CassetteError::Io { path: path.display().to_string(), source })?;
        Ok(Self { backend: Backend::Record { inner, out: Mutex::new(BufWriter::new(file)) } })
    }

    pub fn live(inner: Box<dyn Transport>) -> Self {
        Self { backend: Backend::Live(inner) }
    }

    pub fn mode(&self) -> CassetteMode {
        match self.backend {
            Backend::Replay(_) => CassetteMode::Replay,
            Backend::Record { .. } => CassetteMode::Record,
            Backend::Live(_) => CassetteMode::Live,
        }
    }
}

impl Transport for CassetteTransport {
    fn send(&self, request: &ChatRequest, tag: &CallTag) -> Result<ChatResponse, TransportFailure> {
        match &self.backend {
            Backend::Replay(queues) => {
                let fp = fingerprint(request);
                let mut queues = queues.lock().unwrap_or_else(|e| e.into_inner());
                queues
                    .get_mut(&fp)
                    .and_then(VecDeque::pop_front)
                    .ok_or(TransportFailure::CassetteMiss(fp))
            }
            Backend::Record { inner, out } => {
                let response = inner.send(request, tag)?;
                let entry = CassetteEntry {
                    fingerprint: fingerprint(request),
                    method: tag.method.clone(),
                    phase: tag.phase,
                    request: request.clone(),
                    response: response.clone(),
                };
                let mut out = out.lock().unwrap_or_else(|e| e.into_inner());
                let line = serde_json::to_string(&entry).expect("entry serializes");
                writeln!(out, "{line}")
                    .and_then(|_| out.flush())
                    .map_err(|e| TransportFailure::Fatal(format!("cannot write cassette: {e}")))?;
                Ok(response)
            }
            Backend::Live(inner) => inner.send(request, tag),
        }
    }
}
