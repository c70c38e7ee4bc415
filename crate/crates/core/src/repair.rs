//! Rule-based repairs and the choice between them and a model repair round.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::FocalContext;
use crate::extract::TestCandidate;
use crate::lang::java::TEST_MARKER;
use crate::lang::LanguageAdapter;
use crate::lexer::{BraceBalance, CodeMask};
use crate::prompt::{render_repair, PromptError, RenderedPrompt, TemplateSet};
use crate::scanner::ClassInfo;
use crate::tokens::TokenCounter;
use crate::validate::{Status, ValidationOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("syntax error cannot be repaired by rules")]
pub struct Unrepairable;

fn has_test(source: &str, mask: &CodeMask) -> bool {
    mask.find_code(source, TEST_MARKER).next().is_some()
}

/// Cut `text` and close every open brace; `None` if a `}` closes nothing.
fn balance(text: &str) -> Option<String> {
    let bal = BraceBalance::of(text);
    if bal.min_depth < 0 || bal.depth() < 0 {
        return None;
    }
    let mut out = text.to_string();
    out.extend(std::iter::repeat_n('}', bal.depth() as usize));
    Some(out)
}

fn accept(candidate: Option<String>, adapter: &dyn LanguageAdapter) -> Option<String> {
    let c = candidate?;
    let mask = CodeMask::new(&c);
    (has_test(&c, &mask) && adapter.check_syntax(&c).is_ok()).then_some(c)
}

/// Truncate after the last statement or block end and close open braces.
fn truncate_and_balance(source: &str) -> Option<String> {
    let mask = CodeMask::new(source);
    let cut = mask.rfind_code_byte(source, b";}")?;
    balance(&source[..=cut])
}

pub fn repair_syntax(source: &str, adapter: &dyn LanguageAdapter) -> Result<String, Unrepairable> {
    if adapter.check_syntax(source).is_ok() {
        return Ok(source.to_string());
    }
    if let Some(fixed) = accept(truncate_and_balance(source), adapter) {
        return Ok(fixed);
    }
    // drop the last test and try again
    let mask = CodeMask::new(source);
    let last = mask.find_code(source, TEST_MARKER).last().ok_or(Unrepairable)?;
    let head = source[..last].trim_end();
    accept(balance(head), adapter)
        .or_else(|| accept(truncate_and_balance(head), adapter))
        .ok_or(Unrepairable)
}

static IMPORT_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*import\s+(?:static\s+)?[\w$.]+(?:\s*\.\s*\*)?\s*;[^\n]*\n?").unwrap());
static PACKAGE_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*package\s+[\w.\s]+;[^\n]*\n?").unwrap());

fn normalize_import(line: &str) -> String {
    let stmt = line.split(';').next().unwrap_or(line);
    format!("{};", stmt.split_whitespace().collect::<Vec<_>>().join(" ").replace(" .", ".").replace(". ", "."))
}

/// Import statements of `source`, normalized, in order.
pub fn imports_of(source: &str) -> Vec<String> {
    let mask = CodeMask::new(source);
    IMPORT_LINE
        .find_iter(source)
        .filter(|m| {
            let start = m.start() + (m.as_str().len() - m.as_str().trim_start().len());
            mask.is_code(start)
        })
        .map(|m| normalize_import(m.as_str()))
        .collect()
}

/// Add every import of the focal class that the test lacks.
pub fn repair_imports(source: &str, fc: &ClassInfo) -> String {
    let mask = CodeMask::new(source);
    let present: HashSet<String> = imports_of(source).into_iter().collect();
    let mut missing: Vec<String> = Vec::new();
    for imp in &fc.imports {
        let n = normalize_import(imp);
        if !present.contains(&n) && !missing.contains(&n) {
            missing.push(n);
        }
    }
    if missing.is_empty() {
        return source.to_string();
    }
    let code_match = |m: &regex::Match<'_>| {
        let start = m.start() + (m.as_str().len() - m.as_str().trim_start().len());
        mask.is_code(start)
    };
    let anchor = IMPORT_LINE
        .find_iter(source)
        .filter(|m| code_match(m))
        .last()
        .or_else(|| PACKAGE_LINE.find_iter(source).find(|m| code_match(m)));
    let mut block = missing.join("\n");
    block.push('\n');
    match anchor {
        Some(m) => {
            let at = m.end();
            let mut out = String::with_capacity(source.len() + block.len() + 1);
            out.push_str(&source[..at]);
            if !source[..at].ends_with('\n') {
                out.push('\n');
            }
            out.push_str(&block);
            out.push_str(&source[at..]);
            out
        }
        None => format!("{block}{source}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    Syntax,
    Imports,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminateReason {
    Unrepairable,
    RoundsExhausted,
    PromptOverflow,
    AlreadyPassed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepairAction {
    RuleRepaired(RuleKind, TestCandidate),
    NeedsLlmRepair(RenderedPrompt),
    Terminate(TerminateReason),
}

/// Per-attempt bookkeeping the dispatcher needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairState {
    /// Round of the candidate being repaired, 1-based.
    pub round: u32,
    pub max_rounds: u32,
    /// Imports repair already applied to the current model candidate.
    pub imports_tried: bool,
}

pub struct RepairServices<'a> {
    pub focal_class: &'a ClassInfo,
    pub context: &'a FocalContext,
    pub templates: &'a TemplateSet,
    pub max_prompt_tokens: usize,
    pub counter: &'a dyn TokenCounter,
    pub adapter: &'a dyn LanguageAdapter,
}

pub fn dispatch_repair(
    candidate: &TestCandidate,
    outcome: &ValidationOutcome,
    state: &mut RepairState,
    services: &RepairServices<'_>,
) -> RepairAction {
    match outcome.status {
        Status::Passed => return RepairAction::Terminate(TerminateReason::AlreadyPassed),
        Status::SyntaxError => {
            return match repair_syntax(&candidate.source, services.adapter) {
                Ok(fixed) if fixed != candidate.source => {
                    RepairAction::RuleRepaired(RuleKind::Syntax, candidate.with_source(fixed))
                }
                _ => RepairAction::Terminate(TerminateReason::Unrepairable),
            }
        }
        Status::CompileError if !state.imports_tried => {
            state.imports_tried = true;
            let fixed = repair_imports(&candidate.source, services.focal_class);
            if fixed != candidate.source {
                return RepairAction::RuleRepaired(RuleKind::Imports, candidate.with_source(fixed));
            }
        }
        Status::CompileError | Status::RuntimeError => {}
    }
    if state.round >= state.max_rounds {
        return RepairAction::Terminate(TerminateReason::RoundsExhausted);
    }
    let Some(diagnostic) = outcome.primary() else {
        return RepairAction::Terminate(TerminateReason::Unrepairable);
    };
    match render_repair(
        &services.templates.repair,
        diagnostic,
        &candidate.source,
        services.context,
        services.max_prompt_tokens,
        services.counter,
    ) {
        Ok(prompt) => RepairAction::NeedsLlmRepair(prompt),
        Err(PromptError::PromptOverflow { .. }) => RepairAction::Terminate(TerminateReason::PromptOverflow),
        Err(_) => RepairAction::Terminate(TerminateReason::Unrepairable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{BlockKind, ContextBlock, ContextPath};
    use crate::extract::Origin;
    use crate::lang::JavaAdapter;
    use crate::prompt::TemplateId;
    use crate::tokens::HeuristicCounter;
    use crate::validate::{Diagnostic, DiagnosticKind};
    use proptest::prelude::*;

    fn java() -> JavaAdapter {
        JavaAdapter::new()
    }

    #[test]
    fn closes_open_braces() {
        let out = repair_syntax("class T { @Test void a(){ assertTrue(x);", &java()).unwrap();
        assert_eq!(out, "class T { @Test void a(){ assertTrue(x);}}");
    }

    #[test]
    fn drops_a_mangled_last_test() {
        let src = "class T {\n  @Test void a() { assertTrue(x); }\n  @Test void b() { assertEquals(1, f(2, ";
        let out = repair_syntax(src, &java()).unwrap();
        assert_eq!(out, "class T {\n  @Test void a() { assertTrue(x); }}");
        // the cut after the last `;` is still broken, so only removing the test helps
        let src = "class T {\n  @Test void a() { assertTrue(x); }\n  @Test void b() { int y = f(2, ; g(";
        let out = repair_syntax(src, &java()).unwrap();
        assert_eq!(out, "class T {\n  @Test void a() { assertTrue(x); }}");
    }

    #[test]
    fn valid_input_is_unchanged() {
        let src = "class T { @Test void a() { } }";
        assert_eq!(repair_syntax(src, &java()).unwrap(), src);
    }

    #[test]
    fn lone_marker_is_unrepairable() {
        assert_eq!(repair_syntax("@Test", &java()), Err(Unrepairable));
    }

    #[test]
    fn braces_inside_literals_do_not_count() {
        let out = repair_syntax("class T { @Test void a() { s = \"{{\"; // {\n f('{');", &java()).unwrap();
        assert!(java().check_syntax(&out).is_ok());
        assert!(out.ends_with("f('{');}}"));
    }

    fn fc(imports: &[&str]) -> ClassInfo {
        ClassInfo {
            qualified_name: "calc.Calc".into(),
            package_decl: "package calc;".into(),
            imports: imports.iter().map(|s| s.to_string()).collect(),
            class_signature: "public class Calc".into(),
            fields: vec![],
            constructor_signatures: vec![],
            method_signatures: vec![],
            getter_setter_signatures: vec![],
            source_path: "calc/Calc.java".into(),
        }
    }

    #[test]
    fn missing_import_added_once() {
        let src = "package calc;\n\nimport org.junit.jupiter.api.Test;\n\nclass T { @Test void t() { List<String> l; } }";
        let out = repair_imports(src, &fc(&["import java.util.List;"]));
        assert_eq!(
            out,
            "package calc;\n\nimport org.junit.jupiter.api.Test;\nimport java.util.List;\n\nclass T { @Test void t() { List<String> l; } }"
        );
        assert_eq!(repair_imports(&out, &fc(&["import java.util.List;"])), out);
    }

    #[test]
    fn insertion_points() {
        let f = fc(&["import java.util.Map;"]);
        assert_eq!(repair_imports("package p;\nclass T {}", &f), "package p;\nimport java.util.Map;\nclass T {}");
        assert_eq!(repair_imports("class T {}", &f), "import java.util.Map;\nclass T {}");
        // commented-out imports do not count as present
        assert_eq!(
            repair_imports("// import java.util.Map;\nclass T {}", &f),
            "import java.util.Map;\n// import java.util.Map;\nclass T {}"
        );
    }

    #[test]
    fn union_of_seven_and_two() {
        let fc_imports = [
            "import java.util.List;",
            "import java.util.Map;",
            "import java.util.Set;",
            "import java.io.File;",
            "import java.io.IOException;",
            "import static java.lang.Math.max;",
            "import java.util.function.*;",
        ];
        let src = "package calc;\nimport java.util.List;\nimport java.io.File;\nimport org.junit.jupiter.api.Test;\nclass T { @Test void t() {} }";
        let out = repair_imports(src, &fc(&fc_imports));
        let got = imports_of(&out);
        assert_eq!(got.len(), 8);
        for i in fc_imports {
            assert!(got.contains(&normalize_import(i)), "{i}");
        }
        assert!(java().check_syntax(&out).is_ok());
    }

    fn services<'a>(f: &'a ClassInfo, ctx: &'a FocalContext, t: &'a TemplateSet, a: &'a JavaAdapter) -> RepairServices<'a> {
        RepairServices {
            focal_class: f,
            context: ctx,
            templates: t,
            max_prompt_tokens: 2700,
            counter: &HeuristicCounter,
            adapter: a,
        }
    }

    fn ctx() -> FocalContext {
        FocalContext {
            blocks: vec![
                ContextBlock::new(BlockKind::FocalSig, "public class Calc"),
                ContextBlock::new(BlockKind::FocalCtor, "public Calc()"),
                ContextBlock::new(BlockKind::FocalBody, "public int add(int a, int b) { return a + b; }"),
            ],
            template: TemplateId::Base,
            rendered_tokens: 0,
            path: ContextPath::NoDepAll,
        }
    }

    #[test]
    fn dispatch_flow() {
        let (f, c, t, a) = (fc(&["import java.util.List;"]), ctx(), TemplateSet::builtin(), java());
        let s = services(&f, &c, &t, &a);
        let compile = ValidationOutcome::failed(
            DiagnosticKind::CompileError,
            vec![Diagnostic::new(DiagnosticKind::CompileError, "cannot find symbol: class List")],
        );
        let cand = TestCandidate::new("class T { @Test void t() { List<String> l; } }", Origin::Fenced);
        let mut st = RepairState { round: 1, max_rounds: 6, imports_tried: false };
        let RepairAction::RuleRepaired(RuleKind::Imports, fixed) = dispatch_repair(&cand, &compile, &mut st, &s) else {
            panic!("expected imports repair")
        };
        assert!(fixed.source.starts_with("import java.util.List;\n"));
        // second compile error on the same candidate escalates
        assert!(matches!(dispatch_repair(&fixed, &compile, &mut st, &s), RepairAction::NeedsLlmRepair(_)));

        let runtime = ValidationOutcome::failed(
            DiagnosticKind::RuntimeError,
            vec![Diagnostic::new(DiagnosticKind::RuntimeError, "org.opentest4j.AssertionFailedError")],
        );
        let mut last = RepairState { round: 6, max_rounds: 6, imports_tried: true };
        assert_eq!(
            dispatch_repair(&fixed, &runtime, &mut last, &s),
            RepairAction::Terminate(TerminateReason::RoundsExhausted)
        );

        let syntax = ValidationOutcome::failed(DiagnosticKind::SyntaxError, vec![]);
        let broken = TestCandidate::new("class T { @Test void t() { f();", Origin::Fenced);
        assert!(matches!(dispatch_repair(&broken, &syntax, &mut st, &s), RepairAction::RuleRepaired(RuleKind::Syntax, _)));
        let hopeless = TestCandidate::new("@Test", Origin::Fenced);
        assert_eq!(
            dispatch_repair(&hopeless, &syntax, &mut st, &s),
            RepairAction::Terminate(TerminateReason::Unrepairable)
        );
    }

    proptest! {
        #[test]
        fn imports_union_never_removes_or_duplicates(
            fc_set in proptest::collection::btree_set("[a-c]{1,2}", 0..6),
            test_set in proptest::collection::btree_set("[a-c]{1,2}", 0..6),
        ) {
            let line = |n: &String| format!("import p.{n}.X;");
            let f = fc(&fc_set.iter().map(line).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>());
            let src = format!("package q;\n{}\nclass T {{ @Test void t() {{}} }}", test_set.iter().map(line).collect::<Vec<_>>().join("\n"));
            let out = repair_imports(&src, &f);
            let got = imports_of(&out);
            let unique: HashSet<_> = got.iter().cloned().collect();
            prop_assert_eq!(unique.len(), got.len());
            for n in fc_set.iter().chain(test_set.iter()) {
                prop_assert!(unique.contains(&line(n)));
            }
            prop_assert_eq!(got.len(), fc_set.union(&test_set).count());
            prop_assert!(java().check_syntax(&out).is_ok());
        }
    }
}
