//! Subject-language boundary.
//!
//! Everything the pipeline needs to know about the language of the project
//! under test goes through [`LanguageAdapter`]: parsing source files into
//! index records, syntax checking candidate tests, rendering and resolving
//! signatures, and locating call sites.

use std::path::Path;

use thiserror::Error;

use crate::scanner::{ClassInfo, MethodInfo};

pub mod java;

pub use java::JavaAdapter;

/// Classes and focal-method records extracted from one source file.
///
/// Type references inside `methods` are still as written in the source;
/// the scanner qualifies them once the whole project is known.
#[derive(Debug, Clone, Default)]
pub struct ParsedUnit {
    pub classes: Vec<ClassInfo>,
    pub methods: Vec<MethodInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unresolvable node `{kind}` at line {line}")]
    UnresolvableNode { kind: String, line: usize },
}

/// First syntax problem found in a source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxIssue {
    pub message: String,
    /// 1-based line number.
    pub line: Option<usize>,
}

/// A method invocation in test source, by name and argument count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub name: String,
    pub arity: usize,
}

pub trait LanguageAdapter: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether `path` is a source file of this language.
    fn handles(&self, path: &Path) -> bool;

    fn parse_unit(&self, path: &str, source: &str) -> Result<ParsedUnit, ParseError>;

    /// Succeeds iff `source` is a syntactically valid compilation unit.
    fn check_syntax(&self, source: &str) -> Result<(), SyntaxIssue>;

    /// `name(Type, Type)` key for a method declaration header.
    fn signature_key(&self, declaration: &str) -> Option<String>;

    /// Fully qualify a type name as written inside `context`. `known` reports
    /// whether a qualified name is part of the project. Names that cannot be
    /// resolved come back in their most qualified known form.
    fn qualify(&self, name: &str, context: &ClassInfo, known: &dyn Fn(&str) -> bool) -> String;

    /// Primitive and keyword types that never count as dependencies.
    fn is_builtin_type(&self, name: &str) -> bool;

    /// Signature text used when a class declares no constructor.
    fn implicit_constructor(&self, class: &ClassInfo) -> String;

    /// Every call site in `source`, tolerating syntax errors.
    fn call_sites(&self, source: &str) -> Vec<CallSite>;
}

/// Getter/setter naming rule: `get*`/`is*` with no arguments, `set*` with one.
/// Return-type conditions are checked against declarations where available.
pub fn is_accessor_name(name: &str, arity: usize) -> bool {
    fn prefixed(name: &str, prefix: &str) -> bool {
        name.strip_prefix(prefix)
            .and_then(|rest| rest.chars().next())
            .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit() || c == '_')
    }
    match arity {
        0 => prefixed(name, "get") || prefixed(name, "is"),
        1 => prefixed(name, "set"),
        _ => false,
    }
}
