use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kbqa_core::eval::{load_dataset, run_eval, EvalOptions};
use kbqa_core::kb::{load_kb_dir, LoadMode};
use kbqa_core::pipeline::{Pipeline, PipelineConfig};

fn toy() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

fn eval_workers(c: &mut Criterion) {
    let kb = load_kb_dir(toy(), LoadMode::Strict).unwrap();
    let rows = load_dataset(toy().join("dataset.jsonl")).unwrap();
    let mut group = c.benchmark_group("toy_eval");
    group.sample_size(10);
    for workers in [1, 4] {
        let pipeline = Pipeline::builtin(&kb, PipelineConfig { workers, ..PipelineConfig::default() });
        group.bench_with_input(BenchmarkId::new("workers", workers), &pipeline, |b, p| {
            b.iter(|| run_eval(&rows, p, EvalOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn answer_workers(c: &mut Criterion) {
    let kb = load_kb_dir(toy(), LoadMode::Strict).unwrap();
    let pipeline = Pipeline::builtin(&kb, PipelineConfig::default());
    let q = "Which video game based on the Harry Potter series was released most recently?";
    let mut group = c.benchmark_group("answer");
    for workers in [1, 4] {
        group.bench_with_input(BenchmarkId::new("workers", workers), &workers, |b, &w| {
            b.iter(|| pipeline.answer_with_workers(q, w).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, eval_workers, answer_workers);
criterion_main!(benches);
