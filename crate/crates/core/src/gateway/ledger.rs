use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CallTag, Phase, TokenUsage, Usage};

pub const DEFAULT_PRICE_PER_1K: f64 = 0.002;

pub fn cost_usd(tokens: u64, price_per_1k: f64) -> f64 {
    tokens as f64 / 1000.0 * price_per_1k
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost_usd: f64,
}

impl Totals {
    pub fn tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }

    fn add(&mut self, calls: u64, usage: Usage) {
        self.calls += calls;
        self.prompt_tokens += usage.prompt_tokens;
        self.completion_tokens += usage.completion_tokens;
    }

    fn price(&mut self, price_per_1k: f64) {
        self.cost_usd = cost_usd(self.tokens(), price_per_1k);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTotals {
    pub generation: Totals,
    pub repair: Totals,
    pub total: Totals,
}

impl PhaseTotals {
    fn add(&mut self, phase: Phase, calls: u64, usage: Usage) {
        match phase {
            Phase::Generation => self.generation.add(calls, usage),
            Phase::Repair => self.repair.add(calls, usage),
        }
        self.total.add(calls, usage);
    }

    fn price(&mut self, price_per_1k: f64) {
        self.generation.price(price_per_1k);
        self.repair.price(price_per_1k);
        self.total.price(price_per_1k);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub methods: BTreeMap<String, PhaseTotals>,
    pub project: PhaseTotals,
}

/// Integer token totals per (method, phase); costs are derived on report.
#[derive(Debug)]
pub struct Ledger {
    price_per_1k: f64,
    entries: Mutex<BTreeMap<(String, Phase), (u64, Usage)>>,
}

impl Ledger {
    pub fn new(price_per_1k: f64) -> Self {
        Self { price_per_1k, entries: Mutex::new(BTreeMap::new()) }
    }

    pub fn price_per_1k(&self) -> f64 {
        self.price_per_1k
    }

    pub fn record(&self, tag: &CallTag, usage: Usage) -> TokenUsage {
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        let slot = entries.entry((tag.method.clone(), tag.phase)).or_default();
        slot.0 += 1;
        slot.1.prompt_tokens += usage.prompt_tokens;
        slot.1.completion_tokens += usage.completion_tokens;
        TokenUsage {
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            phase: tag.phase,
            cost_usd: cost_usd(usage.total(), self.price_per_1k),
        }
    }

    pub fn report(&self) -> LedgerReport {
        let entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        let mut report = LedgerReport::default();
        for ((method, phase), (calls, usage)) in entries.iter() {
            report.methods.entry(method.clone()).or_default().add(*phase, *calls, *usage);
            report.project.add(*phase, *calls, *usage);
        }
        for totals in report.methods.values_mut() {
            totals.price(self.price_per_1k);
        }
        report.project.price(self.price_per_1k);
        report
    }
}
