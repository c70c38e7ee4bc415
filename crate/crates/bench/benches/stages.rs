use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use unitsmith_bench::{calc_index, calc_root, material, REPLY, TRUNCATED};
use unitsmith_core::{
    build_adaptive_context, extract, repair_syntax, scan_project, BpeCounter, BudgetConfig, HeuristicCounter,
    JavaAdapter, TemplateSet,
};

fn context(c: &mut Criterion) {
    let index = calc_index();
    let evaluate = material(&index, "com.acme.calc.Calculator", "evaluate(String)");
    let is_leaf = material(&index, "com.acme.calc.Node", "isLeaf()");
    let templates = TemplateSet::builtin();
    let bpe = BpeCounter::cl100k();
    let cfg = BudgetConfig::default();
    c.bench_function("context/dep/bpe", |b| {
        b.iter(|| build_adaptive_context(black_box(&evaluate), &cfg, &templates, &bpe))
    });
    c.bench_function("context/no_dep/bpe", |b| {
        b.iter(|| build_adaptive_context(black_box(&is_leaf), &cfg, &templates, &bpe))
    });
    c.bench_function("context/dep/heuristic", |b| {
        b.iter(|| build_adaptive_context(black_box(&evaluate), &cfg, &templates, &HeuristicCounter))
    });
}

fn extraction(c: &mut Criterion) {
    c.bench_function("extract/two_fences", |b| b.iter(|| extract(black_box(REPLY))));
}

fn repair(c: &mut Criterion) {
    let java = JavaAdapter::new();
    c.bench_function("repair_syntax/truncated", |b| b.iter(|| repair_syntax(black_box(TRUNCATED), &java)));
}

fn scan(c: &mut Criterion) {
    let root = calc_root();
    let java = JavaAdapter::new();
    c.bench_function("scan/calc", |b| b.iter(|| scan_project(black_box(&root), &java)));
}

criterion_group!(benches, context, extraction, repair, scan);
criterion_main!(benches);
