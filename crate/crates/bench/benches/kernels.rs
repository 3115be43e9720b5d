use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use eqfield_bench::{states, two_cut_config};
use eqfield_core::dynamics::{rhs_onecut, rhs_twocut};
use eqfield_core::numerics::{real_roots, tanh_sinh_quad};
use eqfield_core::solver::{onecut_unknowns, residuals, twocut_unknowns};

fn kernels(c: &mut Criterion) {
    let (one, s1, s2) = states();
    let two = two_cut_config();

    c.bench_function("tanh_sinh endpoint singularity", |b| {
        b.iter(|| tanh_sinh_quad(|x| 1.0 / (x * (1.0 - x)).sqrt(), black_box(0.0), 1.0, 1e-12))
    });
    c.bench_function("real_roots quartic", |b| b.iter(|| real_roots(black_box(&[1.0, -0.5, -3.0, 0.2, 1.0]))));
    c.bench_function("residuals one-cut", |b| b.iter(|| residuals(&one, black_box(&s1))));
    c.bench_function("residuals two-cut", |b| b.iter(|| residuals(&two, black_box(&s2))));

    let y1 = onecut_unknowns(&s1).unwrap();
    let y2 = twocut_unknowns(&s2).unwrap();
    c.bench_function("rhs one-cut", |b| b.iter(|| rhs_onecut(&one, 0.5, black_box(&y1))));
    c.bench_function("rhs two-cut", |b| b.iter(|| rhs_twocut(&two, 0.5, black_box(&y2))));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
