//! Script-driven toolchain: syntax through the language adapter, compile and
//! run outcomes from a table of source-pattern rules.

use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use super::{Diagnostic, DiagnosticKind, StageResult, TestUnit, Toolchain, ToolchainError};
use crate::lang::LanguageAdapter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StubStage {
    Compile,
    Run,
}

/// Fires when `pattern` matches the source and `unless` (if set) does not.
#[derive(Debug, Clone)]
pub struct StubRule {
    pub stage: StubStage,
    pub pattern: Regex,
    pub unless: Option<Regex>,
    pub message: String,
}

#[derive(Deserialize)]
struct RawRule {
    stage: StubStage,
    pattern: String,
    #[serde(default)]
    unless: Option<String>,
    message: String,
}

#[derive(Deserialize)]
struct RawTable {
    #[serde(default)]
    rule: Vec<RawRule>,
}

pub struct StubToolchain {
    adapter: Box<dyn LanguageAdapter>,
    rules: Vec<StubRule>,
}

impl StubToolchain {
    pub fn new(adapter: Box<dyn LanguageAdapter>, rules: Vec<StubRule>) -> Self {
        Self { adapter, rules }
    }

    pub fn from_toml(adapter: Box<dyn LanguageAdapter>, text: &str) -> Result<Self, ToolchainError> {
        let table: RawTable =
            toml::from_str(text).map_err(|e| ToolchainError::Unavailable(format!("bad stub rule table: {e}")))?;
        let compile = |p: &str| {
            Regex::new(p).map_err(|e| ToolchainError::Unavailable(format!("bad stub pattern `{p}`: {e}")))
        };
        let mut rules = Vec::new();
        for r in table.rule {
            rules.push(StubRule {
                stage: r.stage,
                pattern: compile(&r.pattern)?,
                unless: r.unless.as_deref().map(compile).transpose()?,
                message: r.message,
            });
        }
        Ok(Self::new(adapter, rules))
    }

    pub fn load(adapter: Box<dyn LanguageAdapter>, path: &Path) -> Result<Self, ToolchainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ToolchainError::Unavailable(format!("{}: {e}", path.display())))?;
        Self::from_toml(adapter, &text)
    }

    fn apply(&self, stage: StubStage, kind: DiagnosticKind, source: &str) -> StageResult {
        let hits: Vec<Diagnostic> = self
            .rules
            .iter()
            .filter(|r| r.stage == stage)
            .filter(|r| r.pattern.is_match(source) && !r.unless.as_ref().is_some_and(|u| u.is_match(source)))
            .map(|r| Diagnostic::new(kind, r.message.clone()))
            .collect();
        if hits.is_empty() {
            Ok(())
        } else {
            Err(hits)
        }
    }
}

impl Toolchain for StubToolchain {
    fn parse(&self, source: &str) -> Result<StageResult, ToolchainError> {
        Ok(self.adapter.check_syntax(source).map_err(|issue| {
            let mut d = Diagnostic::new(DiagnosticKind::SyntaxError, issue.message);
            d.location = issue.line.map(|line| super::Location { file: String::new(), line });
            vec![d]
        }))
    }

    fn compile(&self, unit: &TestUnit) -> Result<StageResult, ToolchainError> {
        Ok(self.apply(StubStage::Compile, DiagnosticKind::CompileError, &unit.source))
    }

    fn run(&self, unit: &TestUnit) -> Result<StageResult, ToolchainError> {
        Ok(self.apply(StubStage::Run, DiagnosticKind::RuntimeError, &unit.source))
    }
}
