use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdisc::ensemble::{random_ensemble, Priors};
use qdisc::hermitian::eig_hermitian;
use qdisc::optimal::SolveOptions;
use qdisc::{compute_lsm, solve_optimal, ComplexMatrix};

fn hermitian(n: usize) -> ComplexMatrix {
    let e = random_ensemble(n, &[n], &Priors::Uniform, 7, false).unwrap();
    e.states()[0].rho.clone()
}

fn eig_benchmark(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig_hermitian");
    for n in [4, 8, 16, 32] {
        let m = hermitian(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| eig_hermitian(black_box(m))));
    }
    group.finish();
}

fn measurement_benchmark(c: &mut Criterion) {
    let cases = [(4, vec![2, 2]), (6, vec![1, 2, 3]), (8, vec![2, 2, 2, 2])];
    let mut lsm = c.benchmark_group("compute_lsm");
    for (n, ranks) in &cases {
        let e = random_ensemble(*n, ranks, &Priors::Random, 11, true).unwrap();
        lsm.bench_with_input(BenchmarkId::from_parameter(n), &e, |b, e| b.iter(|| compute_lsm(black_box(e))));
    }
    lsm.finish();

    let mut solve = c.benchmark_group("solve_optimal");
    let opts = SolveOptions::default();
    for (n, ranks) in &cases {
        let e = random_ensemble(*n, ranks, &Priors::Random, 11, true).unwrap();
        solve.bench_with_input(BenchmarkId::from_parameter(n), &e, |b, e| b.iter(|| solve_optimal(black_box(e), &opts)));
    }
    // Dependent pure states in the plane, where the iteration does real work.
    let e = random_ensemble(2, &[1, 1, 1], &Priors::Random, 11, false).unwrap();
    solve.bench_function("dependent_3x2", |b| b.iter(|| solve_optimal(black_box(&e), &opts)));
    solve.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = eig_benchmark, measurement_benchmark
}
criterion_main!(benches);
