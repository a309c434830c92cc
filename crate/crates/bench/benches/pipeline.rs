use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smmt_bench::encoded;
use smmt_core::netbench::{oracle_suite, stress_suite};
use smmt_core::{eager_encode, prove, solve_cnf, solve_instance, ProveConfig};

fn lazy_vs_eager(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    let config = ProveConfig::default();
    for (name, inst) in encoded(&oracle_suite()).into_iter().step_by(4) {
        group.bench_with_input(BenchmarkId::new("lazy", &name), &inst, |b, inst| {
            b.iter(|| solve_instance(black_box(inst), &config).unwrap())
        });
        let cnf = eager_encode(&inst).unwrap();
        group.bench_with_input(BenchmarkId::new("eager", &name), &cnf, |b, cnf| {
            b.iter(|| solve_cnf(black_box(cnf), Default::default()))
        });
    }
    group.finish();
}

fn full_pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("prove");
    group.sample_size(10);
    for (name, inst) in encoded(&stress_suite()) {
        for (label, backward_check) in [("trimmed", true), ("untrimmed", false)] {
            let config = ProveConfig {
                backward_check,
                ..ProveConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(label, &name), &inst, |b, inst| {
                b.iter(|| prove(black_box(inst), &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, lazy_vs_eager, full_pipeline);
criterion_main!(benches);
