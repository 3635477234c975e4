use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hjbex::control::ControlledModel;
use hjbex::exec::Exec;
use hjbex::gridcore::{CircleGrid, Field, HistorySegment};
use hjbex::hjbverify::{brute_force_value, sample_residuals, settled_start, DelayDp, DpOptions};
use hjbex::models::spatial_growth::{build_spatial_spec, hjb_residual_spatial};
use hjbex::models::time_to_build::build_ttb_spec;
use hjbex::models::DelayState;

fn oracle(c: &mut Criterion) {
    let spec = build_ttb_spec(0.35, 0.05, 1.0, 2.0, 0.1).unwrap();
    let hist = HistorySegment::constant(1.0, 8, 0.2).unwrap();
    let x0 = settled_start(&spec, &DelayState { head: 1.0, controls: hist }, 0.125).unwrap();
    let problem = DelayDp::with_pipeline(&spec, 0.125, spec.a_tilde);
    let opts = DpOptions::default();
    let mut group = c.benchmark_group("dp_oracle");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| brute_force_value(&problem, black_box(&x0), &opts, exec).unwrap())
        });
    }
    group.finish();
    assert!(spec.value(&x0).is_ok());
}

fn residuals(c: &mut Criterion) {
    let grid = CircleGrid::new(512).unwrap();
    let a = Field::from_fn(grid, |t| 0.04 + 0.01 * t.cos());
    let n = Field::from_fn(grid, |t| 1.0 + 0.2 * t.sin());
    let spec = build_spatial_spec(a, n, 0.5, 0.03, grid).unwrap();
    let states: Vec<Field> =
        (0..32).map(|k| Field::from_fn(grid, |t| 1.0 + 0.3 * (t + k as f64).cos() + 0.1 * (2.0 * t).sin())).collect();
    let mut group = c.benchmark_group("residual_sampling");
    group.sample_size(20);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| sample_residuals(exec, black_box(&states), |x| hjb_residual_spatial(&spec, x)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, oracle, residuals);
criterion_main!(benches);
