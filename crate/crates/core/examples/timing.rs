use gpperiod_core::*;
use std::time::Instant;

fn main() {
    let h = Hyperparams::new(1.0, 0.5, 1.0, 0.1).unwrap();
    let lc = synth::sample_gp_curve(&h, 100, (-5.0, 5.0), 42).unwrap();

    let kt = cov_grad(&h, lc.times(), HyperParam::W);
    let t0 = Instant::now();
    for _ in 0..10 { sym_eigen(&kt).unwrap(); }
    println!("sym_eigen N=100: {:.2} ms", t0.elapsed().as_secs_f64()*100.0);

    let cfg = SearchConfig::default();
    let grid = build_coarse_grid(&lc, &cfg).unwrap();
    println!("coarse grid: {} points", grid.len());
    let t0 = Instant::now();
    let _ = grid_scan(&lc, &grid, &h, Criterion::Ml);
    let exact_t = t0.elapsed().as_secs_f64();
    println!("exact coarse scan: {:.3} s", exact_t);
    let t0 = Instant::now();
    let _ = subsample_ensemble_score(&lc, &grid, &h, &SubsampleConfig::default(), Criterion::Ml);
    let sub_t = t0.elapsed().as_secs_f64();
    println!("subsampled coarse scan: {:.3} s ({:.2}x)", sub_t, exact_t/sub_t);

    let centers: Vec<f64> = (0..10).map(|i| 0.45 + 0.01*i as f64).collect();
    let fine = build_fine_grid(&centers, 1e-3, 1e-4);
    println!("fine grid: {} points", fine.len());
    let t0 = Instant::now();
    for _ in 0..5 { let _ = grid_scan(&lc, &fine, &h, Criterion::Ml); }
    let exact_f = t0.elapsed().as_secs_f64()/5.0;
    println!("exact fine scan: {:.1} ms", exact_f*1e3);
    let t0 = Instant::now();
    for _ in 0..5 { let _ = epsnet_fine_scan(&lc, &fine, &h, &LowRankConfig::default(), Criterion::Ml); }
    let eps_f = t0.elapsed().as_secs_f64()/5.0;
    println!("epsnet fine scan: {:.1} ms ({:.0}% time reduction)", eps_f*1e3, (1.0 - eps_f/exact_f)*100.0);

    // full pipelines
    let t0 = Instant::now();
    let _ = estimate_period_with(&lc, &cfg, &ScanPlan::default(), 7).unwrap();
    println!("pipeline full: {:.3} s", t0.elapsed().as_secs_f64());
    let plan_sub = ScanPlan { coarse: CoarseScan::Subsample(SubsampleConfig::default()), fine: FineScan::Exact };
    let t0 = Instant::now();
    let _ = estimate_period_with(&lc, &cfg, &plan_sub, 7).unwrap();
    println!("pipeline sub: {:.3} s", t0.elapsed().as_secs_f64());
    let plan_lowr = ScanPlan { coarse: CoarseScan::Subsample(SubsampleConfig::default()), fine: FineScan::EpsNet(LowRankConfig::default()) };
    let t0 = Instant::now();
    let _ = estimate_period_with(&lc, &cfg, &plan_lowr, 7).unwrap();
    println!("pipeline sub+lowr: {:.3} s", t0.elapsed().as_secs_f64());
}
