use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use qjudge::batch::{par_map, sequential_map};
use qjudge::consistency::propagate;
use qjudge::judgement::{generate_refutation, Refutation};
use qjudge::model::QcInstance;
use qjudge::sample;

fn instances(seed: u64, n: u64, nodes: usize) -> Vec<QcInstance> {
    (0..n).map(|s| sample::random_instance(&mut sample::rng(seed + s), nodes, 3)).collect()
}

fn refuted(inst: &QcInstance) -> bool {
    matches!(generate_refutation(inst), Refutation::Refuted(_))
}

fn consistent(inst: &QcInstance) -> bool {
    propagate(inst, 2).map(|p| p.consistent).unwrap_or(false)
}

fn sweeps(c: &mut Criterion) {
    let refute_set = instances(1, 200, 6);
    let mut g = c.benchmark_group("refutation_sweep");
    g.bench_function("parallel", |b| b.iter(|| par_map(black_box(&refute_set), refuted)));
    g.bench_function("sequential", |b| b.iter(|| sequential_map(black_box(&refute_set), refuted)));
    g.finish();

    let prop_set = instances(9, 200, 7);
    let mut g = c.benchmark_group("propagation_sweep");
    g.bench_function("parallel", |b| b.iter(|| par_map(black_box(&prop_set), consistent)));
    g.bench_function("sequential", |b| b.iter(|| sequential_map(black_box(&prop_set), consistent)));
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
