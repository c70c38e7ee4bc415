//! Attempts × rounds driver.
//!
//! Round 1 builds the context, asks the model for a test, extracts and
//! validates it. Later rounds are model repairs. Rule-based repairs happen
//! between model calls and do not consume a round.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::context::{build_adaptive_context, BudgetConfig, FocalContext, FocalMaterial};
use crate::extract::{extract, TestCandidate};
use crate::gateway::{max_response_tokens, CallTag, ChatRequest, Gateway, LedgerReport, Phase};
use crate::lang::LanguageAdapter;
use crate::prompt::{render, RenderedPrompt, TemplateSet};
use crate::repair::{dispatch_repair, RepairAction, RepairServices, RepairState, RuleKind};
use crate::scanner::{resolve_dependencies, ClassInfo, MethodInfo, MethodKey, ProjectIndex};
use crate::tokens::TokenCounter;
use crate::validate::{
    classify_correct, count_test_api_usage, declared_package, rename_test_class, test_class_name, validate, Status,
    TestUnit, Toolchain, ToolchainError, ValidationOutcome,
};

mod events;

pub use events::{AttemptRecord, EventSink, HistoryEntry, Terminal, UsageSplit, EVENT_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("method {0} is not in the index")]
    UnknownMethod(String),
}

/// Shared, read-only collaborators of a run.
pub struct Services<'a> {
    pub index: &'a ProjectIndex,
    pub adapter: &'a dyn LanguageAdapter,
    pub templates: &'a TemplateSet,
    pub counter: &'a dyn TokenCounter,
    pub gateway: &'a Gateway,
    pub toolchain: &'a dyn Toolchain,
    pub model: &'a str,
    pub events: Option<&'a EventSink>,
    /// Where final test sources are written, mirrored by package.
    pub tests_out: Option<&'a Path>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalCounts {
    pub aborted: u64,
    pub syntax_error: u64,
    pub compile_error: u64,
    pub runtime_error: u64,
    pub passed: u64,
    pub correct: u64,
}

impl TerminalCounts {
    pub fn record(&mut self, terminal: Terminal, correct: bool) {
        match terminal {
            Terminal::Aborted => self.aborted += 1,
            Terminal::SyntaxError => self.syntax_error += 1,
            Terminal::CompileError => self.compile_error += 1,
            Terminal::RuntimeError => self.runtime_error += 1,
            Terminal::Passed => self.passed += 1,
        }
        if correct {
            self.correct += 1;
        }
    }

    pub fn attempts(&self) -> u64 {
        self.aborted + self.syntax_error + self.compile_error + self.runtime_error + self.passed
    }

    pub fn add(&mut self, o: &TerminalCounts) {
        self.aborted += o.aborted;
        self.syntax_error += o.syntax_error;
        self.compile_error += o.compile_error;
        self.runtime_error += o.runtime_error;
        self.passed += o.passed;
        self.correct += o.correct;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptSummary {
    pub attempt: u32,
    pub terminal: Terminal,
    pub correct: bool,
    pub rounds: u32,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub attempts: Vec<AttemptSummary>,
    pub counts: TerminalCounts,
    pub covered: bool,
    pub usage: UsageSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub methods: Vec<MethodReport>,
    pub totals: TerminalCounts,
    pub methods_covered: u64,
    pub usage: UsageSplit,
    pub ledger: LedgerReport,
}

struct Attempt<'s, 'a> {
    services: &'s Services<'a>,
    cfg: &'s RunConfig,
    fc: &'s ClassInfo,
    fm: &'s MethodInfo,
    material: &'s FocalMaterial,
    test_class: String,
    record: AttemptRecord,
}

impl Attempt<'_, '_> {
    fn note(&mut self, round: u32, stage: &str, outcome: impl Into<String>) {
        self.record.history.push(HistoryEntry { round, stage: stage.into(), outcome: outcome.into() });
    }

    fn finish(mut self, terminal: Terminal) -> AttemptRecord {
        self.record.terminal = terminal;
        self.record
    }

    fn ask(&mut self, prompt: &RenderedPrompt, phase: Phase, round: u32) -> Option<String> {
        let request = ChatRequest {
            model: self.services.model.to_string(),
            messages: prompt.messages.clone(),
            temperature: self.cfg.temperature,
            max_response_tokens: max_response_tokens(prompt.token_estimate),
        };
        let tag = CallTag::new(self.fm.key().to_string(), phase);
        let stage = match phase {
            Phase::Generation => "generate",
            Phase::Repair => "llm-repair",
        };
        match self.services.gateway.complete(&request, &tag) {
            Ok(done) => {
                let slot = match phase {
                    Phase::Generation => &mut self.record.usage.generation,
                    Phase::Repair => &mut self.record.usage.repair,
                };
                slot.prompt_tokens += done.usage.prompt_tokens;
                slot.completion_tokens += done.usage.completion_tokens;
                self.record.rounds = round;
                self.note(round, stage, format!("ok after {} tries", done.attempts));
                Some(done.response.content)
            }
            Err(e) => {
                self.note(round, stage, format!("failed: {e}"));
                None
            }
        }
    }

    fn unit(&self, candidate: &TestCandidate) -> TestUnit {
        TestUnit {
            source: rename_test_class(&candidate.source, &self.test_class),
            package: declared_package(&candidate.source).unwrap_or_else(|| self.fc.package().to_string()),
            class_name: self.test_class.clone(),
        }
    }

    fn check(&mut self, candidate: &TestCandidate, round: u32) -> Result<ValidationOutcome, ToolchainError> {
        let outcome = validate(&self.unit(candidate), self.services.toolchain)?;
        let detail = match outcome.primary() {
            Some(d) => format!("{:?}: {}", outcome.status, d.message.lines().next().unwrap_or("")),
            None => format!("{:?}", outcome.status),
        };
        self.note(round, "validate", detail);
        Ok(outcome)
    }

    fn run(mut self) -> Result<(AttemptRecord, Option<TestUnit>), ToolchainError> {
        let budget = BudgetConfig { max_prompt_tokens: self.cfg.max_prompt_tokens, use_fields: self.cfg.use_fields };
        let s = self.services;
        let ctx: FocalContext = match build_adaptive_context(self.material, &budget, s.templates, s.counter) {
            Ok(ctx) => ctx,
            Err(e) => {
                self.note(0, "context", e.to_string());
                return Ok((self.finish(Terminal::Aborted), None));
            }
        };
        self.record.context_path = Some(ctx.path);
        let prompt = match render(s.templates.get(ctx.template), &ctx, s.counter) {
            Ok(p) => p,
            Err(e) => {
                self.note(0, "render", e.to_string());
                return Ok((self.finish(Terminal::Aborted), None));
            }
        };
        let mut round = 1;
        let Some(response) = self.ask(&prompt, Phase::Generation, round) else {
            return Ok((self.finish(Terminal::Aborted), None));
        };
        let mut candidate = match extract(&response) {
            Ok(c) => c.at(self.record.attempt, round),
            Err(e) => {
                self.note(round, "extract", e.to_string());
                return Ok((self.finish(Terminal::SyntaxError), None));
            }
        };

        let mut state = RepairState { round, max_rounds: self.cfg.max_rounds, imports_tried: false };
        loop {
            let outcome = self.check(&candidate, round)?;
            if outcome.status == Status::Passed {
                let correct = classify_correct(&candidate, &outcome, self.fm, s.adapter);
                self.record.correct = correct;
                self.record.api_usage = count_test_api_usage(&candidate.source, s.adapter);
                let unit = self.unit(&candidate);
                return Ok((self.finish(Terminal::Passed), Some(unit)));
            }
            let repair = RepairServices {
                focal_class: self.fc,
                context: &ctx,
                templates: s.templates,
                max_prompt_tokens: self.cfg.max_prompt_tokens,
                counter: s.counter,
                adapter: s.adapter,
            };
            match dispatch_repair(&candidate, &outcome, &mut state, &repair) {
                RepairAction::RuleRepaired(kind, fixed) => {
                    let stage = match kind {
                        RuleKind::Syntax => "syntax-repair",
                        RuleKind::Imports => "imports-repair",
                    };
                    self.note(round, stage, "applied");
                    candidate = fixed;
                }
                RepairAction::NeedsLlmRepair(prompt) => {
                    round += 1;
                    let Some(response) = self.ask(&prompt, Phase::Repair, round) else {
                        let unit = self.unit(&candidate);
                        return Ok((self.finish(outcome.status.into()), Some(unit)));
                    };
                    match extract(&response) {
                        Ok(c) => {
                            candidate = c.at(self.record.attempt, round);
                            state = RepairState { round, max_rounds: self.cfg.max_rounds, imports_tried: false };
                        }
                        Err(e) => {
                            self.note(round, "extract", e.to_string());
                            return Ok((self.finish(Terminal::SyntaxError), None));
                        }
                    }
                }
                RepairAction::Terminate(reason) => {
                    self.note(round, "terminate", format!("{reason:?}"));
                    let unit = self.unit(&candidate);
                    return Ok((self.finish(outcome.status.into()), Some(unit)));
                }
            }
        }
    }
}

/// Index among same-named methods of the class, in key order.
fn overload_ordinal(index: &ProjectIndex, fm: &MethodInfo) -> usize {
    index
        .methods_of(&fm.owner_class)
        .filter(|m| m.name() == fm.name())
        .position(|m| m.signature == fm.signature)
        .unwrap_or(0)
}

fn write_test(root: &Path, unit: &TestUnit) -> Result<(), PipelineError> {
    let mut path = PathBuf::from(root);
    for part in unit.package.split('.').filter(|p| !p.is_empty()) {
        path.push(part);
    }
    let io = |source| PipelineError::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(&path).map_err(io)?;
    path.push(format!("{}.java", unit.class_name));
    std::fs::write(&path, &unit.source).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
}

pub fn run_attempt(
    fm: &MethodInfo,
    material: &FocalMaterial,
    attempt: u32,
    cfg: &RunConfig,
    services: &Services<'_>,
) -> Result<AttemptRecord, PipelineError> {
    let fc = services
        .index
        .class(&fm.owner_class)
        .ok_or_else(|| PipelineError::UnknownMethod(fm.key().to_string()))?;
    let test_class = test_class_name(fc.simple_name(), fm.name(), overload_ordinal(services.index, fm), attempt);
    let run = Attempt {
        services,
        cfg,
        fc,
        fm,
        material,
        test_class: test_class.clone(),
        record: AttemptRecord {
            schema_version: EVENT_SCHEMA_VERSION.into(),
            method: fm.key().to_string(),
            attempt,
            terminal: Terminal::Aborted,
            correct: false,
            rounds: 0,
            context_path: None,
            test_class: None,
            usage: UsageSplit::default(),
            api_usage: BTreeMap::new(),
            history: Vec::new(),
        },
    };
    let (mut record, unit) = run.run()?;
    if let Some(unit) = unit {
        record.test_class = Some(unit.qualified_name());
        if let Some(root) = services.tests_out {
            write_test(root, &unit)?;
        }
    }
    if let Some(sink) = services.events {
        sink.write(&record).map_err(|source| PipelineError::Io { path: "events".into(), source })?;
    }
    Ok(record)
}

pub fn run_method(fm: &MethodInfo, cfg: &RunConfig, services: &Services<'_>) -> Result<MethodReport, PipelineError> {
    let fc = services
        .index
        .class(&fm.owner_class)
        .ok_or_else(|| PipelineError::UnknownMethod(fm.key().to_string()))?;
    let (deps, _external) = resolve_dependencies(fm, services.index, services.adapter);
    let material = FocalMaterial::new(fc, fm, &deps, services.index, services.adapter);
    let mut report = MethodReport {
        method: fm.key().to_string(),
        attempts: Vec::new(),
        counts: TerminalCounts::default(),
        covered: false,
        usage: UsageSplit::default(),
    };
    for attempt in 1..=cfg.attempts_per_method {
        let record = run_attempt(fm, &material, attempt, cfg, services)?;
        report.counts.record(record.terminal, record.correct);
        report.usage.add(&record.usage);
        report.attempts.push(AttemptSummary {
            attempt,
            terminal: record.terminal,
            correct: record.correct,
            rounds: record.rounds,
            tokens: record.usage.total(),
        });
        if cfg.min_passing_to_stop.is_some_and(|n| report.counts.correct >= u64::from(n)) {
            break;
        }
    }
    report.covered = report.counts.correct > 0;
    Ok(report)
}

pub fn run_project(cfg: &RunConfig, services: &Services<'_>) -> Result<RunReport, PipelineError> {
    let methods: Vec<&MethodInfo> = services.index.focal_methods().collect();
    run_methods(&methods, cfg, services)
}

pub fn run_methods(methods: &[&MethodInfo], cfg: &RunConfig, services: &Services<'_>) -> Result<RunReport, PipelineError> {
    let reports: Vec<MethodReport> = if cfg.workers == 1 {
        methods.iter().map(|m| run_method(m, cfg, services)).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Io { path: "worker pool".into(), source: std::io::Error::other(e) })?;
        pool.install(|| methods.par_iter().map(|m| run_method(m, cfg, services)).collect::<Result<_, _>>())?
    };
    let mut totals = TerminalCounts::default();
    let mut usage = UsageSplit::default();
    for r in &reports {
        totals.add(&r.counts);
        usage.add(&r.usage);
    }
    Ok(RunReport {
        methods_covered: reports.iter().filter(|r| r.covered).count() as u64,
        methods: reports,
        totals,
        usage,
        ledger: services.gateway.ledger_report(),
    })
}

/// Key of every focal method, for callers that select a subset.
pub fn method_keys(index: &ProjectIndex) -> Vec<MethodKey> {
    index.methods.keys().cloned().collect()
}
