//! Three-stage validation (parse, compile, run) behind a toolchain boundary.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::TestCandidate;
use crate::lang::LanguageAdapter;
use crate::lexer::CodeMask;
use crate::scanner::MethodInfo;

mod process;
mod stub;

pub use process::{ProcessConfig, ProcessToolchain};
pub use stub::{StubRule, StubStage, StubToolchain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    SyntaxError,
    CompileError,
    RuntimeError,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::SyntaxError => "SyntaxError",
            DiagnosticKind::CompileError => "CompileError",
            DiagnosticKind::RuntimeError => "RuntimeError",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub file: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub location: Option<Location>,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        let message = message.into();
        let message = if message.trim().is_empty() { format!("{kind} (no message)") } else { message };
        Self { kind, message, location: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    SyntaxError,
    CompileError,
    RuntimeError,
    Passed,
}

impl From<DiagnosticKind> for Status {
    fn from(kind: DiagnosticKind) -> Self {
        match kind {
            DiagnosticKind::SyntaxError => Status::SyntaxError,
            DiagnosticKind::CompileError => Status::CompileError,
            DiagnosticKind::RuntimeError => Status::RuntimeError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub status: Status,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationOutcome {
    pub fn passed() -> Self {
        Self { status: Status::Passed, diagnostics: Vec::new() }
    }

    pub fn failed(kind: DiagnosticKind, mut diagnostics: Vec<Diagnostic>) -> Self {
        if diagnostics.is_empty() {
            diagnostics.push(Diagnostic::new(kind, format!("{kind} (no diagnostics reported)")));
        }
        Self { status: kind.into(), diagnostics }
    }

    /// Diagnostic that drives repair: the first one reported.
    pub fn primary(&self) -> Option<&Diagnostic> {
        self.diagnostics.first()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolchainError {
    #[error("toolchain unavailable: {0}")]
    Unavailable(String),
    #[error("toolchain i/o failure: {0}")]
    Io(String),
}

/// What a toolchain needs to place and name one candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestUnit {
    pub source: String,
    /// Dotted package, empty for the default package.
    pub package: String,
    /// Simple name the test class is stored under.
    pub class_name: String,
}

impl TestUnit {
    pub fn qualified_name(&self) -> String {
        if self.package.is_empty() {
            self.class_name.clone()
        } else {
            format!("{}.{}", self.package, self.class_name)
        }
    }
}

pub type StageResult = Result<(), Vec<Diagnostic>>;

pub trait Toolchain: Send + Sync {
    fn parse(&self, source: &str) -> Result<StageResult, ToolchainError>;
    fn compile(&self, unit: &TestUnit) -> Result<StageResult, ToolchainError>;
    fn run(&self, unit: &TestUnit) -> Result<StageResult, ToolchainError>;
}

/// Parse, compile and run in order, stopping at the first failing stage.
pub fn validate(unit: &TestUnit, toolchain: &dyn Toolchain) -> Result<ValidationOutcome, ToolchainError> {
    if let Err(d) = toolchain.parse(&unit.source)? {
        return Ok(ValidationOutcome::failed(DiagnosticKind::SyntaxError, d));
    }
    if let Err(d) = toolchain.compile(unit)? {
        return Ok(ValidationOutcome::failed(DiagnosticKind::CompileError, d));
    }
    if let Err(d) = toolchain.run(unit)? {
        return Ok(ValidationOutcome::failed(DiagnosticKind::RuntimeError, d));
    }
    Ok(ValidationOutcome::passed())
}

/// `<FocalClass>_<method>_<attempt>Test`; overloads after the first get an ordinal after the method name.
pub fn test_class_name(focal_class: &str, method: &str, overload: usize, attempt: u32) -> String {
    if overload == 0 {
        format!("{focal_class}_{method}_{attempt}Test")
    } else {
        format!("{focal_class}_{method}{}_{attempt}Test", overload + 1)
    }
}

/// Rename the first declared top-level class to `new_name`, including
/// constructor and self references in code.
pub fn rename_test_class(source: &str, new_name: &str) -> String {
    let mask = CodeMask::new(source);
    let Some(old) = declared_class_name(source, &mask) else {
        return source.to_string();
    };
    if old == new_name {
        return source.to_string();
    }
    let mut out = String::with_capacity(source.len());
    let mut last = 0;
    for (pos, _) in source.match_indices(old.as_str()) {
        let before = source[..pos].chars().next_back();
        let after = source[pos + old.len()..].chars().next();
        let boundary = |c: Option<char>| c.is_none_or(|c| !(c.is_alphanumeric() || c == '_' || c == '$'));
        if mask.is_code(pos) && boundary(before) && boundary(after) {
            out.push_str(&source[last..pos]);
            out.push_str(new_name);
            last = pos + old.len();
        }
    }
    out.push_str(&source[last..]);
    out
}

fn declared_class_name(source: &str, mask: &CodeMask) -> Option<String> {
    for pos in mask.find_code(source, "class") {
        let before = source[..pos].chars().next_back();
        if before.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.') {
            continue;
        }
        let rest = &source[pos + 5..];
        if !rest.starts_with(char::is_whitespace) {
            continue;
        }
        let name: String = rest.trim_start().chars().take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '$').collect();
        if !name.is_empty() {
            return Some(name);
        }
    }
    None
}

/// Package named by the first `package` declaration in code, if any.
pub fn declared_package(source: &str) -> Option<String> {
    let mask = CodeMask::new(source);
    let pos = mask.find_code(source, "package").find(|&p| {
        source[..p].chars().next_back().is_none_or(|c| c.is_whitespace() || c == ';')
            && source[p + 7..].starts_with(char::is_whitespace)
    })?;
    let rest = &source[pos + 7..];
    let end = rest.find(';')?;
    Some(rest[..end].split_whitespace().collect())
}

fn is_assertion(name: &str) -> bool {
    name.starts_with("assert") || name == "fail"
}

const MOCK_API: &[&str] = &[
    "mock",
    "spy",
    "when",
    "given",
    "willReturn",
    "thenReturn",
    "thenThrow",
    "thenAnswer",
    "thenCallRealMethod",
    "doReturn",
    "doThrow",
    "doNothing",
    "doAnswer",
    "doCallRealMethod",
    "verify",
    "verifyNoMoreInteractions",
    "verifyNoInteractions",
    "verifyZeroInteractions",
    "times",
    "never",
    "atLeast",
    "atLeastOnce",
    "atMost",
    "any",
    "anyInt",
    "anyLong",
    "anyString",
    "anyList",
    "anyMap",
    "eq",
    "argThat",
    "reset",
    "inOrder",
    "mockStatic",
];

/// Counts of assertion-family and mock-family calls by name.
pub fn count_test_api_usage(source: &str, adapter: &dyn LanguageAdapter) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for site in adapter.call_sites(source) {
        if is_assertion(&site.name) || MOCK_API.contains(&site.name.as_str()) {
            *counts.entry(site.name).or_insert(0) += 1;
        }
    }
    counts
}

/// Passed, asserts something, and calls the focal method (name and arity).
pub fn classify_correct(
    candidate: &TestCandidate,
    outcome: &ValidationOutcome,
    focal: &MethodInfo,
    adapter: &dyn LanguageAdapter,
) -> bool {
    if outcome.status != Status::Passed {
        return false;
    }
    let sites = adapter.call_sites(&candidate.source);
    let asserts = sites.iter().any(|s| is_assertion(&s.name) && s.name != "fail");
    let arity = focal.arity();
    let calls_focal = sites.iter().any(|s| {
        s.name == focal.name() && (s.arity == arity || (focal.is_varargs() && s.arity + 1 >= arity))
    });
    asserts && calls_focal
}
