use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fairdiv_bench::bench_instance;
use fairdiv_core::{
    brute_force_nash_opt, round_instance, solve, Epsilon, Mode, SolverConfig,
};

fn solve_adaptive(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_adaptive");
    for &(n, m) in &[(2usize, 4usize), (3, 5), (4, 7)] {
        let inst = bench_instance(n, m, 10, 42);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_m{m}")),
            &inst,
            |b, inst| {
                let config = SolverConfig {
                    // Dominance enumeration is benchmarked separately.
                    po_check_budget: 1,
                    ..SolverConfig::default()
                };
                b.iter(|| solve(black_box(inst), &config).unwrap());
            },
        );
    }
    group.finish();
}

fn solve_fixed_small_epsilon(c: &mut Criterion) {
    let inst = bench_instance(3, 6, 10, 7);
    let config = SolverConfig {
        mode: Mode::Fixed,
        epsilon: Epsilon::unit_fraction(64).unwrap(),
        po_check_budget: 1,
        ..SolverConfig::default()
    };
    c.bench_function("solve_fixed_eps_1_64", |b| {
        b.iter(|| solve(black_box(&inst), &config).unwrap());
    });
}

fn rounding(c: &mut Criterion) {
    let inst = bench_instance(4, 7, 1000, 3);
    let eps = Epsilon::unit_fraction(128).unwrap();
    c.bench_function("round_instance_eps_1_128", |b| {
        b.iter(|| round_instance(black_box(&inst), &eps));
    });
}

fn nash_opt_enumeration(c: &mut Criterion) {
    let inst = bench_instance(3, 7, 10, 11);
    c.bench_function("brute_force_nash_opt_3x7", |b| {
        b.iter(|| brute_force_nash_opt(black_box(&inst), 1 << 20).unwrap());
    });
}

criterion_group!(
    benches,
    solve_adaptive,
    solve_fixed_small_epsilon,
    rounding,
    nash_opt_enumeration
);
criterion_main!(benches);
