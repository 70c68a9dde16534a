use gpperiod_core::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    for nv in [0.05, 0.025] {
        let truth = Hyperparams::new(1.0, 0.25, 1.0, nv).unwrap();
        let mut hits = 0; let mut maxima_min = usize::MAX;
        for seed in 0..10u64 {
            let lc = synth::sample_gp_curve(&truth, 30, (-10.0, 10.0), 1000 + seed).unwrap();
            let grid = FrequencyGrid::from_range(0.05, 1.5, 0.001).unwrap();
            let t = grid_scan(&lc, &grid, &truth, Criterion::Ml);
            let (bi, _) = t.arg_best().unwrap();
            if accuracy_hit(1.0 / t.grid.values()[bi], 4.0, 0.01) { hits += 1; }
            let mut m = 0;
            for i in 1..t.scores.len()-1 { if t.scores[i] > t.scores[i-1] && t.scores[i] > t.scores[i+1] { m += 1; } }
            maxima_min = maxima_min.min(m);
        }
        println!("crit1 noise {nv}: {hits}/10, min maxima {maxima_min}");
    }

    let cfg = SearchConfig::default();
    for (klo, khi, d2lo, d2hi, sig) in [(4.0,6.0,0.85,0.95,0.04), (4.0,6.0,0.80,0.90,0.05), (5.0,7.0,0.85,0.95,0.04)] {
        let noise = Normal::new(0.0, sig).unwrap();
        let scorer = ReferenceScorer::default();
        let (mut un, mut dbl, mut lsf, mut comb, mut alias) = (0, 0, 0, 0, 0);
        let n_eb = 24u64;
        for i in 0..n_eb {
            let mut rng = ChaCha8Rng::seed_from_u64(9200 + i);
            let p = rng.random_range(1.2..2.2);
            let d2 = rng.random_range(d2lo..d2hi);
            let kappa = rng.random_range(klo..khi);
            let phase0 = rng.random_range(0.0..1.0);
            let mut times: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
            times.sort_by(f64::total_cmp);
            times.dedup_by(|a, b| *a == *b);
            let dip = |ph: f64, c: f64, d: f64| -> f64 {
                let ang = 2.0*std::f64::consts::PI*(ph - c);
                -d*( kappa*(ang.cos()-1.0) ).exp()
            };
            let mags: Vec<f64> = times.iter().map(|&t| {
                let ph = ((t/p) + phase0).rem_euclid(1.0);
                10.0 + dip(ph, 0.25, 1.0) + dip(ph, 0.75, d2) + noise.sample(&mut rng)
            }).collect();
            let lc = LightCurve::new(format!("eb{i}"), times, mags, None).unwrap();
            let gp_cand = estimate_period(&lc, &cfg, derive_seed(777, i)).unwrap();
            let r = gp_cand.items[0].period / p;
            if (r - 0.5).abs() < 0.02 { alias += 1; }
            if accuracy_hit(gp_cand.items[0].period, p, 0.01) { un += 1; }
            let d = double_period_filter(&lc, &gp_cand, &scorer);
            if accuracy_hit(d.period, p, 0.01) { dbl += 1; }
            let grid = build_coarse_grid(&lc, &cfg).unwrap();
            let ls_cand = baseline_estimate(&lc, BaselineMethod::Ls, &grid, 10);
            let lf = double_period_filter(&lc, &ls_cand, &scorer);
            if accuracy_hit(lf.period, p, 0.01) { lsf += 1; }
            let cm = combine_methods(&lc, &gp_cand, &ls_cand, &scorer);
            if accuracy_hit(cm.period, p, 0.01) { comb += 1; }
        }
        println!("EB k[{klo},{khi}] d2[{d2lo},{d2hi}] s{sig}: un {un} alias {alias} dbl {dbl} lsf {lsf} comb {comb} /{n_eb}");
    }
}
