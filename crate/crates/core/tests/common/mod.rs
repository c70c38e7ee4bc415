//! Shared fixtures: the calc project, the scripted model and the replay run.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::Deserialize;
use unitsmith_core::gateway::{CassetteTransport, FinishReason};
use unitsmith_core::pipeline::run_project;
use unitsmith_core::prompt::prompt_text;
use unitsmith_core::report::{report_events, to_csv};
use unitsmith_core::{
    build_gateway, build_toolchain, load_templates, report_json, scan_project, BpeCounter, CallTag, Cassette,
    ChatRequest, ChatResponse, Config, EventSink, JavaAdapter, Phase, ProjectIndex, RunReport, Services,
    TokenCounter, Transport, TransportFailure, Usage,
};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn calc_index() -> ProjectIndex {
    scan_project(&fixture("calc"), &JavaAdapter::new()).expect("calc fixture scans").index
}

/// `UPDATE_GOLDEN=1` rewrites goldens instead of comparing against them.
pub fn updating_goldens() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1")
}

pub fn assert_golden(rel: &str, actual: &str) {
    let path = fixture(rel);
    if updating_goldens() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{rel} differs from the golden copy; rerun with UPDATE_GOLDEN=1 after review");
}

#[derive(Deserialize)]
struct ScriptFile {
    method: Vec<ScriptedMethod>,
}

#[derive(Deserialize)]
struct ScriptedMethod {
    key: String,
    attempts: Vec<Vec<String>>,
}

/// Stand-in for the chat model: replays scripted replies per method, a new
/// attempt starting at every generation call.
pub struct ScriptedModel {
    script: HashMap<String, Vec<Vec<String>>>,
    cursor: Mutex<HashMap<String, (usize, usize)>>,
    counter: BpeCounter,
}

impl ScriptedModel {
    pub fn load() -> Self {
        let file: ScriptFile = toml::from_str(&read_fixture("e2e/script.toml")).expect("script parses");
        Self {
            script: file.method.into_iter().map(|m| (m.key, m.attempts)).collect(),
            cursor: Mutex::new(HashMap::new()),
            counter: BpeCounter::cl100k(),
        }
    }
}

impl Transport for ScriptedModel {
    fn send(&self, request: &ChatRequest, tag: &CallTag) -> Result<ChatResponse, TransportFailure> {
        let attempts = self.script.get(&tag.method).unwrap_or_else(|| panic!("no script for {}", tag.method));
        let mut cursor = self.cursor.lock().unwrap();
        let (attempt, round) = match (tag.phase, cursor.get(&tag.method).copied()) {
            (Phase::Generation, None) => (0, 0),
            (Phase::Generation, Some((a, _))) => (a + 1, 0),
            (Phase::Repair, Some((a, r))) => (a, r + 1),
            (Phase::Repair, None) => panic!("repair before generation for {}", tag.method),
        };
        cursor.insert(tag.method.clone(), (attempt, round));
        let reply = attempts
            .get(attempt)
            .and_then(|rounds| rounds.get(round))
            .unwrap_or_else(|| panic!("script for {} ends at {attempt}/{round}", tag.method));
        let reply = reply.trim_start_matches('\n').to_string();
        Ok(ChatResponse {
            usage: Usage {
                prompt_tokens: self.counter.count(&prompt_text(&request.messages)) as u64,
                completion_tokens: self.counter.count(&reply) as u64,
            },
            content: reply,
            finish_reason: FinishReason::Stop,
        })
    }
}

/// Shared in-memory event sink target.
#[derive(Clone, Default)]
pub struct Buffer(pub Arc<Mutex<Vec<u8>>>);

impl Write for Buffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl Buffer {
    pub fn text(&self) -> String {
        String::from_utf8(self.0.lock().unwrap().clone()).unwrap()
    }
}

pub struct E2eRun {
    pub report: RunReport,
    pub report_json: String,
    pub events: String,
    pub csv: String,
    pub tests_dir: tempfile::TempDir,
}

/// Run the calc fixture end to end through `transport`.
pub fn run_calc(transport: Box<dyn Transport>) -> E2eRun {
    let cfg = Config::load(&fixture("e2e/config.toml")).expect("e2e config loads");
    let index = calc_index();
    let adapter = JavaAdapter::new();
    let templates = load_templates(&cfg).unwrap();
    let counter = BpeCounter::cl100k();
    let gateway = build_gateway(&cfg.gateway, transport);
    let work = tempfile::tempdir().unwrap();
    let toolchain = build_toolchain(cfg.toolchain.as_ref(), work.path()).unwrap();
    let buffer = Buffer::default();
    let sink = EventSink::new(Box::new(buffer.clone()));
    let tests_dir = tempfile::tempdir().unwrap();
    let services = Services {
        index: &index,
        adapter: &adapter,
        templates: &templates,
        counter: &counter,
        gateway: &gateway,
        toolchain: toolchain.as_ref(),
        model: &cfg.gateway.model,
        events: Some(&sink),
        tests_out: Some(tests_dir.path()),
    };
    let report = run_project(&cfg.run, &services).expect("run completes");
    let events = buffer.text();
    let (summary, warnings) = report_events(events.as_bytes()).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    E2eRun { report_json: report_json(&report), report, csv: to_csv(&summary).unwrap(), events, tests_dir }
}

pub fn cassette_path() -> PathBuf {
    fixture("e2e/cassette.jsonl")
}

/// Replay from the committed cassette, or re-record it under `UPDATE_GOLDEN=1`.
pub fn replay_or_record() -> E2eRun {
    let transport = if updating_goldens() {
        CassetteTransport::record(&cassette_path(), Box::new(ScriptedModel::load())).unwrap()
    } else {
        CassetteTransport::replay(Cassette::load(&cassette_path()).expect("committed cassette loads"))
    };
    run_calc(Box::new(transport))
}

/// The 20 valid test classes of the repair corpus, by file name.
pub fn valid_test_classes() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixture("repair/valid"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Every valid class cut at `per_class` seeded random points.
pub fn truncations(per_class: usize, seed: u64) -> Vec<(String, String)> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, src) in valid_test_classes() {
        let cuts: Vec<usize> = (1..src.len()).filter(|&i| src.is_char_boundary(i)).collect();
        for _ in 0..per_class {
            let at = cuts[rng.random_range(0..cuts.len())];
            out.push((format!("{name}@{at}"), src[..at].to_string()));
        }
    }
    out
}
