//! Outcome tables from attempt event logs.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{cost_usd, DEFAULT_PRICE_PER_1K};
use crate::pipeline::{AttemptRecord, TerminalCounts, UsageSplit, EVENT_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("event schema {found} is newer than supported {supported}")]
    NewerSchema { found: String, supported: String },
    #[error("cannot read events: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write report: {0}")]
    Write(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scope: String,
    pub methods: u64,
    pub attempts: u64,
    pub counts: TerminalCounts,
    pub covered: u64,
    pub usage: UsageSplit,
}

impl Row {
    fn new(scope: impl Into<String>) -> Self {
        Self {
            scope: scope.into(),
            methods: 0,
            attempts: 0,
            counts: TerminalCounts::default(),
            covered: 0,
            usage: UsageSplit::default(),
        }
    }

    fn push(&mut self, r: &AttemptRecord) {
        self.attempts += 1;
        self.counts.record(r.terminal, r.correct);
        self.usage.add(&r.usage);
    }

    /// Share of non-aborted attempts, in percent.
    pub fn percent(&self, count: u64) -> f64 {
        let base = self.attempts.saturating_sub(self.counts.aborted);
        if base == 0 {
            0.0
        } else {
            count as f64 * 100.0 / base as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<Row>,
    pub total: Row,
    pub price_per_1k: f64,
    pub skipped_lines: usize,
}

/// Event schema major version, `1` for `"1.0"`.
fn major(version: &str) -> Option<u64> {
    version.split('.').next()?.trim().parse().ok()
}

/// Parse an event stream, skipping (and counting) malformed lines.
pub fn read_events(input: impl BufRead) -> Result<(Vec<AttemptRecord>, Vec<String>), ReportError> {
    let supported = major(EVENT_SCHEMA_VERSION).expect("own schema version parses");
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                warnings.push(format!("line {}: {e}", i + 1));
                continue;
            }
        };
        if let Some(found) = value.get("schema_version").and_then(|v| v.as_str()) {
            if major(found).is_some_and(|m| m > supported) {
                return Err(ReportError::NewerSchema { found: found.into(), supported: EVENT_SCHEMA_VERSION.into() });
            }
        }
        match serde_json::from_value::<AttemptRecord>(value) {
            Ok(r) => records.push(r),
            Err(e) => warnings.push(format!("line {}: {e}", i + 1)),
        }
    }
    Ok((records, warnings))
}

pub fn summarize(records: &[AttemptRecord], price_per_1k: f64, skipped_lines: usize) -> Summary {
    let mut by_method: BTreeMap<&str, Row> = BTreeMap::new();
    let mut total = Row::new("TOTAL");
    for r in records {
        by_method.entry(&r.method).or_insert_with(|| Row::new(&r.method)).push(r);
        total.push(r);
    }
    let mut rows: Vec<Row> = by_method.into_values().collect();
    for row in &mut rows {
        row.methods = 1;
        row.covered = u64::from(row.counts.correct > 0);
    }
    total.methods = rows.len() as u64;
    total.covered = rows.iter().map(|r| r.covered).sum();
    Summary { rows, total, price_per_1k, skipped_lines }
}

pub const CSV_HEADER: [&str; 19] = [
    "Scope",
    "Methods",
    "Attempts",
    "Aborted",
    "SyntaxError",
    "SyntaxError%",
    "CompileError",
    "CompileError%",
    "RuntimeError",
    "RuntimeError%",
    "Passed",
    "Passed%",
    "Correct",
    "Correct%",
    "Covered",
    "GenerationTokens",
    "GenerationCostUsd",
    "RepairTokens",
    "RepairCostUsd",
];

fn csv_fields(row: &Row, price: f64) -> Vec<String> {
    let c = &row.counts;
    let pct = |n: u64| format!("{:.2}", row.percent(n));
    let gen = row.usage.generation.total();
    let rep = row.usage.repair.total();
    vec![
        row.scope.clone(),
        row.methods.to_string(),
        row.attempts.to_string(),
        c.aborted.to_string(),
        c.syntax_error.to_string(),
        pct(c.syntax_error),
        c.compile_error.to_string(),
        pct(c.compile_error),
        c.runtime_error.to_string(),
        pct(c.runtime_error),
        c.passed.to_string(),
        pct(c.passed),
        c.correct.to_string(),
        pct(c.correct),
        row.covered.to_string(),
        gen.to_string(),
        format!("{:.6}", cost_usd(gen, price)),
        rep.to_string(),
        format!("{:.6}", cost_usd(rep, price)),
    ]
}

pub fn to_csv(summary: &Summary) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| ReportError::Write(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for row in summary.rows.iter().chain(std::iter::once(&summary.total)) {
        w.write_record(csv_fields(row, summary.price_per_1k)).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Write(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Write(e.to_string()))
}

pub fn to_json(summary: &Summary) -> Result<String, ReportError> {
    #[derive(Serialize)]
    struct JsonRow<'a> {
        #[serde(flatten)]
        row: &'a Row,
        percent: BTreeMap<&'static str, f64>,
        generation_cost_usd: f64,
        repair_cost_usd: f64,
    }
    fn build(row: &Row, price: f64) -> JsonRow<'_> {
        let c = &row.counts;
        let round2 = |v: f64| (v * 100.0).round() / 100.0;
        JsonRow {
            row,
            percent: BTreeMap::from([
                ("syntax_error", round2(row.percent(c.syntax_error))),
                ("compile_error", round2(row.percent(c.compile_error))),
                ("runtime_error", round2(row.percent(c.runtime_error))),
                ("passed", round2(row.percent(c.passed))),
                ("correct", round2(row.percent(c.correct))),
            ]),
            generation_cost_usd: cost_usd(row.usage.generation.total(), price),
            repair_cost_usd: cost_usd(row.usage.repair.total(), price),
        }
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        rows: Vec<JsonRow<'a>>,
        total: JsonRow<'a>,
        price_per_1k: f64,
        skipped_lines: usize,
    }
    let doc = Doc {
        rows: summary.rows.iter().map(|r| build(r, summary.price_per_1k)).collect(),
        total: build(&summary.total, summary.price_per_1k),
        price_per_1k: summary.price_per_1k,
        skipped_lines: summary.skipped_lines,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| ReportError::Write(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Default-priced summary of an events stream.
pub fn report_events(input: impl BufRead) -> Result<(Summary, Vec<String>), ReportError> {
    let (records, warnings) = read_events(input)?;
    let summary = summarize(&records, DEFAULT_PRICE_PER_1K, warnings.len());
    Ok((summary, warnings))
}
