//! Lightweight lexical pass over Java-like source.
//!
//! Classifies every byte as code or non-code (string/char/text-block literal,
//! line or block comment) so that brace counting and marker searches are not
//! fooled by `"}"` or `// {`. Unterminated literals and comments are tolerated:
//! truncated model output is the main input.

/// Byte-level code mask for one source string.
#[derive(Debug, Clone)]
pub struct CodeMask {
    code: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Str,
    Char,
    TextBlock,
}

impl CodeMask {
    pub fn new(source: &str) -> Self {
        let bytes = source.as_bytes();
        let mut code = vec![false; bytes.len()];
        let mut state = State::Code;
        let mut i = 0;
        while i < bytes.len() {
            let b = bytes[i];
            let next = bytes.get(i + 1).copied();
            match state {
                State::Code => match (b, next) {
                    (b'/', Some(b'/')) => {
                        state = State::LineComment;
                        i += 2;
                        continue;
                    }
                    (b'/', Some(b'*')) => {
                        state = State::BlockComment;
                        i += 2;
                        continue;
                    }
                    (b'"', _) if bytes[i..].starts_with(b"\"\"\"") => {
                        state = State::TextBlock;
                        i += 3;
                        continue;
                    }
                    (b'"', _) => state = State::Str,
                    (b'\'', _) => state = State::Char,
                    _ => code[i] = true,
                },
                State::LineComment => {
                    if b == b'\n' {
                        state = State::Code;
                        code[i] = true;
                    }
                }
                State::BlockComment => {
                    if b == b'*' && next == Some(b'/') {
                        state = State::Code;
                        i += 2;
                        continue;
                    }
                }
                State::Str | State::Char => {
                    let close = if state == State::Str { b'"' } else { b'\'' };
                    if b == b'\\' {
                        i += 2;
                        continue;
                    }
                    if b == close {
                        state = State::Code;
                    } else if b == b'\n' {
                        // unterminated literal: Java literals cannot span lines
                        state = State::Code;
                        code[i] = true;
                    }
                }
                State::TextBlock => {
                    if b == b'\\' {
                        i += 2;
                        continue;
                    }
                    if bytes[i..].starts_with(b"\"\"\"") {
                        state = State::Code;
                        i += 3;
                        continue;
                    }
                }
            }
            i += 1;
        }
        Self { code }
    }

    pub fn is_code(&self, byte: usize) -> bool {
        self.code.get(byte).copied().unwrap_or(false)
    }

    /// Byte offsets of `needle` occurrences whose first byte is code.
    pub fn find_code<'a>(&'a self, source: &'a str, needle: &'a str) -> impl Iterator<Item = usize> + 'a {
        source
            .match_indices(needle)
            .map(|(pos, _)| pos)
            .filter(move |&pos| self.is_code(pos))
    }

    /// Offset of the last code byte equal to one of `targets`.
    pub fn rfind_code_byte(&self, source: &str, targets: &[u8]) -> Option<usize> {
        source
            .bytes()
            .enumerate()
            .rev()
            .find(|&(i, b)| targets.contains(&b) && self.is_code(i))
            .map(|(i, _)| i)
    }
}

/// Brace accounting over the code bytes of a source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BraceBalance {
    pub opens: usize,
    pub closes: usize,
    /// Lowest running depth reached; negative means a `}` closed nothing.
    pub min_depth: i64,
}

impl BraceBalance {
    pub fn of(source: &str) -> Self {
        let mask = CodeMask::new(source);
        Self::with_mask(source, &mask)
    }

    pub fn with_mask(source: &str, mask: &CodeMask) -> Self {
        let mut bal = BraceBalance::default();
        let mut depth = 0i64;
        for (i, b) in source.bytes().enumerate() {
            if !mask.is_code(i) {
                continue;
            }
            match b {
                b'{' => {
                    bal.opens += 1;
                    depth += 1;
                }
                b'}' => {
                    bal.closes += 1;
                    depth -= 1;
                    bal.min_depth = bal.min_depth.min(depth);
                }
                _ => {}
            }
        }
        bal
    }

    pub fn depth(&self) -> i64 {
        self.opens as i64 - self.closes as i64
    }
}
