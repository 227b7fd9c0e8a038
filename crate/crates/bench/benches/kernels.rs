use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lowrank_bench::{laplace_nn, ramp, rank_one_rhs};
use lowrank_core::tensor::svd::jacobi_svd;
use lowrank_core::LinearProblem;
use nalgebra::DMatrix;

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("kron_apply");
    for d in [4, 6, 8] {
        let op = laplace_nn(d, 3);
        let u = ramp(op.dims());
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| op.apply(black_box(&u)).unwrap())
        });
    }
    group.finish();
}

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi_svd");
    for n in [16, 32, 64] {
        let m = DMatrix::from_fn(n, n, |i, j| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 7.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| jacobi_svd(black_box(&m)).unwrap())
        });
    }
    group.finish();
}

fn richardson_step(c: &mut Criterion) {
    let op = laplace_nn(5, 3);
    let rhs = rank_one_rhs(op.dims());
    let problem = LinearProblem::new(&op, &rhs).unwrap();
    let u = ramp(op.dims());
    c.bench_function("richardson_step_d5_n3", |b| b.iter(|| problem.step(black_box(&u)).unwrap()));
}

criterion_group!(benches, apply, svd, richardson_step);
criterion_main!(benches);
