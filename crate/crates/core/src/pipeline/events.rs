//! Per-attempt event records, one JSON object per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::context::ContextPath;
use crate::gateway::Usage;
use crate::validate::Status;

pub const EVENT_SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Terminal {
    Aborted,
    SyntaxError,
    CompileError,
    RuntimeError,
    Passed,
}

impl From<Status> for Terminal {
    fn from(s: Status) -> Self {
        match s {
            Status::SyntaxError => Terminal::SyntaxError,
            Status::CompileError => Terminal::CompileError,
            Status::RuntimeError => Terminal::RuntimeError,
            Status::Passed => Terminal::Passed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageSplit {
    pub generation: Usage,
    pub repair: Usage,
}

impl UsageSplit {
    pub fn total(&self) -> u64 {
        self.generation.total() + self.repair.total()
    }

    pub fn add(&mut self, other: &UsageSplit) {
        for (a, b) in [(&mut self.generation, &other.generation), (&mut self.repair, &other.repair)] {
            a.prompt_tokens += b.prompt_tokens;
            a.completion_tokens += b.completion_tokens;
        }
    }
}

/// One step of an attempt: `stage` names what ran, `outcome` what came of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round: u32,
    pub stage: String,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub schema_version: String,
    pub method: String,
    pub attempt: u32,
    pub terminal: Terminal,
    pub correct: bool,
    /// Rounds used, i.e. model calls that returned; 0 for aborted attempts.
    pub rounds: u32,
    pub context_path: Option<ContextPath>,
    pub test_class: Option<String>,
    pub usage: UsageSplit,
    pub api_usage: BTreeMap<String, usize>,
    pub history: Vec<HistoryEntry>,
}

/// Thread-safe JSONL writer; every record is flushed as soon as it is written.
pub struct EventSink {
    out: Mutex<Box<dyn Write + Send>>,
}

impl EventSink {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self::new(Box::new(BufWriter::new(File::create(path)?))))
    }

    pub fn new(out: Box<dyn Write + Send>) -> Self {
        Self { out: Mutex::new(out) }
    }

    pub fn write(&self, record: &AttemptRecord) -> io::Result<()> {
        let line = serde_json::to_string(record).map_err(io::Error::other)?;
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(out, "{line}")?;
        out.flush()
    }
}
