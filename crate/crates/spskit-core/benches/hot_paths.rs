//! Throughput benchmarks for the hot loops, labeled by execution backend.
//!
//! Run once with the default features and once with `--no-default-features`
//! to compare the rayon and sequential paths; criterion keeps the results
//! under distinct ids.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use spskit_core::{exec, models, pathfind, sim, sps};

fn bench_enumerate(c: &mut Criterion) {
    let model = models::build_t6(14).unwrap();
    let init = models::default_initial_state(models::ModelKind::T6, 14).unwrap();
    let mut group = c.benchmark_group("enumerate_sps/t6_n14");
    group.bench_function(exec::backend(), |b| {
        b.iter(|| sps::enumerate_sps(&model.maps, black_box(init), sps::DEFAULT_CAP).unwrap().len())
    });
    group.finish();
}

fn bench_chi_sweep(c: &mut Criterion) {
    let model = models::build_f4(10).unwrap();
    let mut group = c.benchmark_group("chi_sweep/f4_n10_mu3");
    group.sample_size(10);
    group.bench_function(exec::backend(), |b| {
        b.iter(|| pathfind::chi_sweep(&model.maps, 10, black_box(3)).unwrap().failures)
    });
    group.finish();
}

fn bench_trajectories(c: &mut Criterion) {
    let model = models::build_heisenberg(10, 0.1).unwrap();
    let cc = sim::compile(&model.circuit);
    let init = models::default_initial_state(models::ModelKind::Heisenberg, 10).unwrap();
    let noise = sim::NoiseSpec::new(0.02, 11).unwrap();
    let mut group = c.benchmark_group("sample_measurements/heis_n10_p10_m200");
    group.sample_size(10);
    group.bench_function(exec::backend(), |b| {
        b.iter(|| sim::sample_measurements(&cc, init, 10, black_box(200), &noise).unwrap().shots.len())
    });
    group.finish();
}

criterion_group!(benches, bench_enumerate, bench_chi_sweep, bench_trajectories);
criterion_main!(benches);
