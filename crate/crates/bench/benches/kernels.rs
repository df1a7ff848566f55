use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use latmat_bench::{cost_matrix, detection_fixture};
use latmat_core::detmetrics::evaluate;
use latmat_core::matchagree::hungarian;
use latmat_core::specfun::reg_inc_beta;
use latmat_core::ShapePair;

fn bench_reg_inc_beta(c: &mut Criterion) {
    let mut group = c.benchmark_group("reg_inc_beta");
    for (a, b) in [(0.5, 0.5), (2.0, 5.0), (50.0, 80.0), (3000.0, 9000.0)] {
        let shape = ShapePair::new(a, b).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{a}-{b}")), &shape, |bench, &s| {
            bench.iter(|| reg_inc_beta(black_box(0.37), s).unwrap())
        });
    }
    group.finish();
}

fn bench_hungarian(c: &mut Criterion) {
    let mut group = c.benchmark_group("hungarian");
    for n in [5, 20, 80] {
        let cost = cost_matrix(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cost, |bench, m| bench.iter(|| hungarian(black_box(m)).unwrap()));
    }
    group.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let (dets, gts) = detection_fixture(2000, 3);
    c.bench_function("evaluate_2000", |bench| bench.iter(|| evaluate(black_box(&dets), black_box(&gts)).unwrap()));
}

criterion_group!(benches, bench_reg_inc_beta, bench_hungarian, bench_evaluate);
criterion_main!(benches);
