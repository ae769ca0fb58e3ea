//! Parallel vs sequential throughput of the three hot loops: fixed-p
//! event estimation, coupled threshold sweeps, and exact enumeration.
//! Run with `cargo bench -p percolab`; build with
//! `--no-default-features` to measure the pure sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use percolab::montecarlo::{estimate_curve, estimate_event, estimate_max_pivotal};
use percolab::oracle::exact_probability;
use percolab::{Event, ExecMode, Rect, RngSpec};

const MODES: [(&str, ExecMode); 2] =
    [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn bench_estimate_event(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_event");
    let rect = Rect::at_origin(48, 16).unwrap();
    let event = Event::HorizontalCrossing(rect);
    let rng = RngSpec::new(1);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::new("48x16_n2000", name), &mode, |b, &mode| {
            b.iter(|| estimate_event(black_box(&event), 0.5, 2000, rng, mode).unwrap());
        });
    }
    group.finish();
}

fn bench_sweep_curve(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_curve");
    let rect = Rect::at_origin(48, 16).unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let rng = RngSpec::new(2);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::new("48x16_n1000_grid101", name), &mode, |b, &mode| {
            b.iter(|| estimate_curve(black_box(rect), &grid, 1000, rng, mode).unwrap());
        });
    }
    group.finish();
}

fn bench_max_pivotal(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_max_pivotal");
    let rect = Rect::at_origin(24, 8).unwrap();
    let rng = RngSpec::new(3);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::new("24x8_n2000", name), &mode, |b, &mode| {
            b.iter(|| estimate_max_pivotal(black_box(rect), 0.5, 2000, rng, mode).unwrap());
        });
    }
    group.finish();
}

fn bench_oracle_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_probability");
    group.sample_size(10);
    let rect = Rect::at_origin(3, 2).unwrap(); // 2^17 states
    let event = Event::HorizontalCrossing(rect);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::new("3x2_131072_states", name), &mode, |b, &mode| {
            b.iter(|| exact_probability(black_box(&event), mode).unwrap());
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_estimate_event,
    bench_sweep_curve,
    bench_max_pivotal,
    bench_oracle_enumeration
);
criterion_main!(benches);
