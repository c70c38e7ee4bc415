//! Token counting.
//!
//! A counter must be deterministic, return zero for the empty string, and
//! never decrease when text is appended after a newline separator.

use std::sync::{Arc, OnceLock};

use tiktoken_rs::CoreBPE;

pub trait TokenCounter: Send + Sync {
    fn name(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

/// Offline approximation: one token per four characters, rounded up.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicCounter;

impl TokenCounter for HeuristicCounter {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn count(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

/// Byte-pair-encoding counter over the `cl100k_base` vocabulary used by the
/// gpt-3.5-turbo / gpt-4 family.
#[derive(Clone)]
pub struct BpeCounter {
    bpe: Arc<CoreBPE>,
}

impl BpeCounter {
    pub fn cl100k() -> Self {
        static SHARED: OnceLock<Arc<CoreBPE>> = OnceLock::new();
        let bpe = SHARED
            .get_or_init(|| Arc::new(tiktoken_rs::cl100k_base().expect("embedded cl100k vocabulary loads")))
            .clone();
        Self { bpe }
    }
}

impl std::fmt::Debug for BpeCounter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BpeCounter(cl100k_base)")
    }
}

impl TokenCounter for BpeCounter {
    fn name(&self) -> &str {
        "cl100k_base"
    }

    fn count(&self, text: &str) -> usize {
        if text.is_empty() {
            return 0;
        }
        self.bpe.encode_ordinary(text).len()
    }
}

/// Counter selection by configuration name.
pub fn counter_by_name(name: &str) -> Option<Arc<dyn TokenCounter>> {
    match name {
        "heuristic" => Some(Arc::new(HeuristicCounter)),
        "bpe" | "cl100k" | "cl100k_base" => Some(Arc::new(BpeCounter::cl100k())),
        _ => None,
    }
}
