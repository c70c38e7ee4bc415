//! Pull the test class out of a chat response.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::java::TEST_MARKER;
use crate::lexer::CodeMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Fenced,
    Unfenced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCandidate {
    pub source: String,
    pub origin: Origin,
    pub attempt: u32,
    pub round: u32,
}

impl TestCandidate {
    pub fn new(source: impl Into<String>, origin: Origin) -> Self {
        Self { source: source.into(), origin, attempt: 0, round: 0 }
    }

    pub fn at(mut self, attempt: u32, round: u32) -> Self {
        self.attempt = attempt;
        self.round = round;
        self
    }

    /// Same position, new text (used by rule-based repairs).
    pub fn with_source(&self, source: String) -> Self {
        Self { source, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ExtractionFailure {
    #[error("no code fence and no public test class in the response")]
    NoFenceNoKeyword,
    #[error("every code block lacks a test annotation, and no test class follows")]
    AllBlocksFiltered,
    #[error("the unfenced class carries no test annotation")]
    NoTestMarker,
}

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```[^\n]*\n(.*?)\n?```").unwrap());
static CLASS_DECL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bclass\s+[A-Za-z_$]").unwrap());
static TEST_CLASS_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\bpublic\b.*\bclass\s+[A-Za-z_$][\w$]*Test\b").unwrap());
static PUBLIC_TEST_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\bpublic\b.*\b[A-Za-z_$][\w$]*Test\b").unwrap());
static PREAMBLE_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:$|import\s|package\s|@|//|/\*|\*)").unwrap());

pub fn extract(response: &str) -> Result<TestCandidate, ExtractionFailure> {
    let blocks: Vec<&str> = FENCE
        .captures_iter(response)
        .filter_map(|c| c.get(1).map(|m| m.as_str()))
        .collect();
    let survivors: Vec<&str> = blocks.iter().copied().filter(|b| b.contains(TEST_MARKER)).collect();
    if let Some(block) = survivors.iter().find(|b| CLASS_DECL.is_match(b)).or(survivors.first()) {
        return Ok(TestCandidate::new(*block, Origin::Fenced));
    }
    match unfenced(response) {
        Some(source) if source.contains(TEST_MARKER) => Ok(TestCandidate::new(source, Origin::Unfenced)),
        Some(_) => Err(ExtractionFailure::NoTestMarker),
        None if blocks.is_empty() => Err(ExtractionFailure::NoFenceNoKeyword),
        None => Err(ExtractionFailure::AllBlocksFiltered),
    }
}

fn line_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' {
            spans.push((start, i));
            start = i + 1;
        }
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}

fn starts_like_code(line: &str) -> bool {
    match line.trim_start().chars().next() {
        None => true,
        Some(c) => c.is_alphabetic() || matches!(c, '_' | '@' | '}' | '{' | '/' | '*' | '(' | ')' | ';' | '"'),
    }
}

fn unfenced(response: &str) -> Option<&str> {
    let lines = line_spans(response);
    let line = |i: usize| &response[lines[i].0..lines[i].1];
    let anchor = (0..lines.len())
        .find(|&i| TEST_CLASS_LINE.is_match(line(i)))
        .or_else(|| (0..lines.len()).find(|&i| PUBLIC_TEST_LINE.is_match(line(i))))?;

    let mut first = anchor;
    while first > 0 && PREAMBLE_LINE.is_match(line(first - 1)) {
        first -= 1;
    }
    while first < anchor && line(first).trim().is_empty() {
        first += 1;
    }

    let start = lines[first].0;
    let region = &response[start..];
    let mask = CodeMask::new(region);
    let mut depth = 0i64;
    let mut opened = false;
    let mut end = lines[anchor].1;
    'lines: for &(ls, le) in &lines[anchor..] {
        let text = &response[ls..le];
        if !starts_like_code(text) {
            break;
        }
        end = le;
        for (off, b) in text.bytes().enumerate() {
            let pos = ls - start + off;
            if !mask.is_code(pos) {
                continue;
            }
            match b {
                b'{' => {
                    depth += 1;
                    opened = true;
                }
                b'}' => {
                    depth -= 1;
                    if opened && depth <= 0 {
                        end = ls + off + 1;
                        break 'lines;
                    }
                }
                _ => {}
            }
        }
    }
    Some(response[start..end].trim_end())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLASS: &str = "import org.junit.jupiter.api.Test;\n\npublic class CalcTest {\n    @Test\n    void adds() {\n        assertEquals(3, new Calc().add(1, 2));\n    }\n}";

    #[test]
    fn single_fenced_block() {
        let r = format!("Sure! Here you go:\n```java\n{CLASS}\n```\nThis tests add.");
        let c = extract(&r).unwrap();
        assert_eq!(c.source, CLASS);
        assert_eq!(c.origin, Origin::Fenced);
    }

    #[test]
    fn usage_snippet_without_marker_is_filtered() {
        let r = format!("Usage:\n```java\nCalc c = new Calc();\n```\nTest:\n```java\n{CLASS}\n```");
        assert_eq!(extract(&r).unwrap().source, CLASS);
    }

    #[test]
    fn unfenced_with_trailing_prose() {
        let r = format!("Here is the test:\n{CLASS}\nHope this helps!");
        let c = extract(&r).unwrap();
        assert_eq!(c.source, CLASS);
        assert_eq!(c.origin, Origin::Unfenced);
    }

    #[test]
    fn unfenced_stops_at_balanced_close_on_same_line() {
        let r = "public class ATest { @Test void t() { f(); } } and that's it";
        assert_eq!(extract(r).unwrap().source, "public class ATest { @Test void t() { f(); } }");
    }

    #[test]
    fn pure_prose_fails() {
        assert_eq!(extract("I cannot help with that."), Err(ExtractionFailure::NoFenceNoKeyword));
    }

    #[test]
    fn fenced_without_marker_and_no_class_fails() {
        assert_eq!(extract("```\nint x = 1;\n```"), Err(ExtractionFailure::AllBlocksFiltered));
    }

    #[test]
    fn unfenced_class_without_marker_fails() {
        assert_eq!(extract("public class FooTest {\n}\n"), Err(ExtractionFailure::NoTestMarker));
    }

    #[test]
    fn braces_in_strings_do_not_end_the_class() {
        let r = "public class STest {\n  @Test void t() { assertEquals(\"}\", s()); }\n}\nThanks";
        assert_eq!(extract(r).unwrap().source, "public class STest {\n  @Test void t() { assertEquals(\"}\", s()); }\n}");
    }
}
