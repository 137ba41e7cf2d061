//! Benchmarks for the solver, the realized filter, and the Monte-Carlo
//! harness. Budgets sit inside the feasible range so every solve actually
//! searches for a water level.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use nalgebra::DVector;
use nrdf_bench::{long_scalar_params, two_dim_model};
use nrdf_core::waterfill::{SolverOptions, Strategy};
use nrdf_core::{
    build_realization, filter_step, nrdf_rate, rate_functions::LogBase, run_realization_sim,
    sample_trajectory, solve, solve_scalar, waterfill_pass,
};

fn options(strategy: Strategy) -> SolverOptions {
    SolverOptions {
        tolerance_eps: 1e-9,
        gain_beta: 1.0,
        max_iterations: 100_000,
        strategy,
    }
}

fn bench_waterfill_pass(c: &mut Criterion) {
    let model = two_dim_model();
    c.bench_function("waterfill_pass/2dim", |b| {
        b.iter(|| waterfill_pass(black_box(&model), black_box(0.8)).unwrap())
    });
}

fn bench_solve_strategies(c: &mut Criterion) {
    let model = two_dim_model();
    let mut group = c.benchmark_group("solve/2dim_d1.0");
    group.bench_function("proportional_gain", |b| {
        let opts = options(Strategy::ProportionalGain);
        b.iter(|| solve(black_box(&model), black_box(1.0), &opts).unwrap())
    });
    group.bench_function("bisection", |b| {
        let opts = options(Strategy::Bisection);
        b.iter(|| solve(black_box(&model), black_box(1.0), &opts).unwrap())
    });
    group.finish();
}

fn bench_solve_scalar_long_horizon(c: &mut Criterion) {
    let (alphas, noise_vars, init_var) = long_scalar_params(512);
    let opts = options(Strategy::Bisection);
    c.bench_function("solve_scalar/512_stages", |b| {
        b.iter(|| {
            solve_scalar(
                black_box(&alphas),
                black_box(&noise_vars),
                black_box(init_var),
                black_box(0.5),
                &opts,
            )
            .unwrap()
        })
    });
}

fn bench_rate(c: &mut Criterion) {
    let model = two_dim_model();
    let sol = solve(&model, 1.0, &options(Strategy::Bisection)).unwrap();
    c.bench_function("nrdf_rate/2dim", |b| {
        b.iter(|| nrdf_rate(black_box(&sol), LogBase::Two).unwrap())
    });
}

fn bench_filter_trajectory(c: &mut Criterion) {
    let model = two_dim_model();
    let sol = solve(&model, 1.0, &options(Strategy::Bisection)).unwrap();
    let real = build_realization(&sol, None).unwrap();
    let traj = sample_trajectory(&model, 17).unwrap();
    let v = DVector::from_element(2, 0.3);
    c.bench_function("filter_step/2dim_trajectory", |b| {
        b.iter_batched(
            || DVector::zeros(2),
            |mut y_prev| {
                for t in 0..=model.horizon_n {
                    let state =
                        filter_step(&real, &model, t, &traj.states[t], &y_prev, &v).unwrap();
                    y_prev = state.reproduction;
                }
                y_prev
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_simulation(c: &mut Criterion) {
    let model = two_dim_model();
    let sol = solve(&model, 1.0, &options(Strategy::Bisection)).unwrap();
    let real = build_realization(&sol, None).unwrap();
    let mut group = c.benchmark_group("run_realization_sim/2dim");
    group.sample_size(20);
    group.bench_function("m2000", |b| {
        b.iter(|| run_realization_sim(&model, &sol, &real, black_box(2_000), 0).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_waterfill_pass,
    bench_solve_strategies,
    bench_solve_scalar_long_horizon,
    bench_rate,
    bench_filter_trajectory,
    bench_simulation
);
criterion_main!(benches);
