//! Scan-stage benchmarks: exact vs subsampled coarse scans and exact vs
//! ε-net fine scans, plus the end-to-end pipeline.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gpperiod_bench::fixture_series;
use gpperiod_core::{
    build_coarse_grid, build_fine_grid, epsnet_fine_scan, grid_scan, subsample_ensemble_score,
    estimate_period, Criterion as ScanCriterion, LowRankConfig, SearchConfig, SubsampleConfig,
};

fn coarse_scans(c: &mut Criterion) {
    let (lc, h) = fixture_series(100);
    let cfg = SearchConfig::default();
    let grid = build_coarse_grid(&lc, &cfg).expect("grid");
    let mut group = c.benchmark_group("coarse_scan");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("exact", grid.len()), &grid, |b, g| {
        b.iter(|| grid_scan(&lc, g, &h, ScanCriterion::Ml));
    });
    group.bench_with_input(BenchmarkId::new("subsampled", grid.len()), &grid, |b, g| {
        let sub = SubsampleConfig::default();
        b.iter(|| subsample_ensemble_score(&lc, g, &h, &sub, ScanCriterion::Ml));
    });
    group.finish();
}

fn fine_scans(c: &mut Criterion) {
    let (lc, h) = fixture_series(100);
    let centers: Vec<f64> = (0..10).map(|i| 0.45 + 0.01 * i as f64).collect();
    let fine = build_fine_grid(&centers, 1e-3, 1e-4);
    let mut group = c.benchmark_group("fine_scan");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("exact", fine.len()), &fine, |b, g| {
        b.iter(|| grid_scan(&lc, g, &h, ScanCriterion::Ml));
    });
    group.bench_with_input(BenchmarkId::new("epsnet", fine.len()), &fine, |b, g| {
        let cfg = LowRankConfig::default();
        b.iter(|| epsnet_fine_scan(&lc, g, &h, &cfg, ScanCriterion::Ml));
    });
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let (lc, _) = fixture_series(100);
    let cfg = SearchConfig::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("estimate_period_n100", |b| {
        b.iter(|| estimate_period(&lc, &cfg, 7).expect("search succeeds"));
    });
    group.finish();
}

criterion_group!(benches, coarse_scans, fine_scans, pipeline);
criterion_main!(benches);
