use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use eqfield_bench::{states, two_cut_config};
use eqfield_core::dynamics::{default_t_stop, evolve_from_start};
use eqfield_core::{find_gamma_interval, solve_onecut, solve_twocut, EvolveOptions, SolverOptions};

fn solves(c: &mut Criterion) {
    let (one, s1, s2) = states();
    let two = two_cut_config();
    let opts = SolverOptions::default();

    c.bench_function("solve_onecut warm", |b| b.iter(|| solve_onecut(&one, black_box(0.52), &s1, &opts)));
    c.bench_function("solve_twocut warm", |b| b.iter(|| solve_twocut(&two, black_box(0.52), &s2, &opts)));

    let mut group = c.benchmark_group("end to end");
    group.sample_size(10);
    let eo = EvolveOptions::default();
    group.bench_function("evolve two-cut scenario", |b| {
        b.iter(|| evolve_from_start(&two, default_t_stop(&two, &eo), &eo))
    });
    group.bench_function("find_gamma_interval", |b| b.iter(|| find_gamma_interval(black_box(0.3), 0.3)));
    group.finish();
}

criterion_group!(benches, solves);
criterion_main!(benches);
