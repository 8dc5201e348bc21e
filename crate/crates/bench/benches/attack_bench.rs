//! Micro-benchmarks for the hot paths: tokenization, deletion saliency,
//! PWWS ranking, and a full DCP attack on one example.

use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, Criterion};

use dcp_bench::{BenchFixture, SAMPLE_TEXT};
use dcp_core::attack::{
    pwws_rank, run_dcp_attack, run_pwws_attack, AttackConfig, AttackContext, InputTemplate,
};
use dcp_core::corpus::{AttackTarget, Example, SegmentRole};
use dcp_core::saliency::{self, PositionFilters};
use dcp_core::textproc::tokenize;
use dcp_core::victim::{ModelInput, QueryMeter};

fn bench_tokenize(c: &mut Criterion) {
    c.bench_function("tokenize_paragraph", |b| {
        b.iter(|| tokenize(std::hint::black_box(SAMPLE_TEXT)))
    });
}

fn bench_deletion_saliency(c: &mut Criterion) {
    let fx = BenchFixture::load();
    let input = ModelInput::classify(SAMPLE_TEXT);
    c.bench_function("deletion_saliency_paragraph", |b| {
        b.iter(|| {
            let mut meter = QueryMeter::new();
            saliency::deletion_saliency(&fx.victim, &input, SegmentRole::Text, 1, &mut meter)
                .unwrap()
        })
    });
}

fn bench_pwws_rank(c: &mut Criterion) {
    let fx = BenchFixture::load();
    let config = AttackConfig::default();
    let tt = fx.tokenizer.annotate(SAMPLE_TEXT);
    let template = InputTemplate {
        role: SegmentRole::Text,
        frozen: Vec::new(),
    };
    let by_position: BTreeMap<_, _> =
        saliency::perturbable_positions(&tt, PositionFilters::default())
            .into_iter()
            .map(|pos| (pos, fx.generator.gather(&tt, pos, &config.candidate_config())))
            .collect();
    c.bench_function("pwws_rank_paragraph", |b| {
        b.iter(|| {
            let mut meter = QueryMeter::new();
            pwws_rank(&fx.victim, &template, &tt, 1, &by_position, &mut meter).unwrap()
        })
    });
}

fn bench_attacks(c: &mut Criterion) {
    let fx = BenchFixture::load();
    let ctx = AttackContext {
        model: &fx.victim,
        embedder: &fx.embedder,
        tokenizer: &fx.tokenizer,
        candidates: &fx.generator,
    };
    let example = Example::classify(
        "bench-1",
        SAMPLE_TEXT,
        1,
        vec!["negative".into(), "positive".into()],
    );
    let config = AttackConfig::default();
    c.bench_function("dcp_attack_paragraph", |b| {
        b.iter(|| run_dcp_attack(&ctx, &example, AttackTarget::Text, &config).unwrap())
    });
    c.bench_function("pwws_attack_paragraph", |b| {
        b.iter(|| run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap())
    });
}

criterion_group!(
    benches,
    bench_tokenize,
    bench_deletion_saliency,
    bench_pwws_rank,
    bench_attacks
);
criterion_main!(benches);
