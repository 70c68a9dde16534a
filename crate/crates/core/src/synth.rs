//! Synthetic corpora (harmonic and GP-sampled) and the benchmark harness
//! that produces accuracy and reconstruction-error curves over sample sizes.

use crate::baselines::{self, BaselineMethod};
use crate::fastpath::{LowRankConfig, SubsampleConfig};
use crate::gp;
use crate::kernel::Hyperparams;
use crate::lightcurve::{accuracy_hit, LightCurve};
use crate::linalg;
use crate::search::{
    self, CoarseScan, Criterion, FineScan, ScanPlan, SearchConfig, SearchError,
};
use crate::derive_seed;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of evenly spaced points carrying the true latent function for
/// reconstruction scoring.
pub const LATENT_GRID_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    Harmonic,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n_series: usize,
    pub n_samples: usize,
    pub time_range: (f64, f64),
    pub noise_var: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::Harmonic,
            n_series: 50,
            n_samples: 100,
            time_range: (-5.0, 5.0),
            noise_var: 0.1,
            seed: 0,
        }
    }
}

/// Ground truth carried with a generated series.
#[derive(Debug, Clone)]
pub enum Truth {
    Harmonic {
        a: f64,
        b: f64,
        omega: f64,
        phi1: f64,
        phi2: f64,
    },
    /// Latent GP values sampled jointly with the observations on a fixed
    /// evaluation grid.
    Latent { xs: Vec<f64>, fs: Vec<f64> },
}

impl Truth {
    /// Evaluation grid and true function values for reconstruction scoring.
    pub fn curve(&self, range: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
        match self {
            Truth::Harmonic { a, b, omega, phi1, phi2 } => {
                let xs = even_grid(range, LATENT_GRID_POINTS);
                let fs = xs
                    .iter()
                    .map(|&x| a * (omega * x + phi1).sin() + b * (omega * x + phi2).cos())
                    .collect();
                (xs, fs)
            }
            Truth::Latent { xs, fs } => (xs.clone(), fs.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSeries {
    pub lc: LightCurve,
    pub true_period: f64,
    pub truth: Truth,
    /// Generating kernel hyperparameters (GP corpus only).
    pub gen_hyper: Option<Hyperparams>,
}

fn even_grid(range: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Strictly increasing i.i.d.-uniform sample times.
fn draw_times(rng: &mut ChaCha8Rng, n: usize, range: (f64, f64)) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(range.0..range.1)).collect();
        t.sort_by(f64::total_cmp);
        if t.windows(2).all(|w| w[0] < w[1]) {
            return t;
        }
    }
}

/// Harmonic corpus: `y ~ N(a·sin(ωx+φ₁) + b·cos(ωx+φ₂), σ²)` with
/// `a,b ~ U(0,5)`, `ω ~ U(1,4)` (angular), `φᵢ ~ N(0,1)`; period `2π/ω`.
pub fn gen_harmonic(spec: &SynthSpec) -> Vec<SynthSeries> {
    assert_eq!(spec.kind, SynthKind::Harmonic);
    let noise = Normal::new(0.0, spec.noise_var.sqrt()).expect("valid noise");
    let phase = Normal::new(0.0, 1.0).expect("valid phase dist");
    (0..spec.n_series)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, i as u64));
            let a = rng.random_range(0.0..5.0);
            let b = rng.random_range(0.0..5.0);
            let omega = rng.random_range(1.0..4.0);
            let phi1 = phase.sample(&mut rng);
            let phi2 = phase.sample(&mut rng);
            let times = draw_times(&mut rng, spec.n_samples, spec.time_range);
            let mags: Vec<f64> = times
                .iter()
                .map(|&x| a * (omega * x + phi1).sin() + b * (omega * x + phi2).cos() + noise.sample(&mut rng))
                .collect();
            let lc = LightCurve::new(format!("harmonic-{i:04}"), times, mags, None)
                .expect("generated series is valid");
            SynthSeries {
                lc,
                true_period: 2.0 * std::f64::consts::PI / omega,
                truth: Truth::Harmonic { a, b, omega, phi1, phi2 },
                gen_hyper: None,
            }
        })
        .collect()
}

/// One zero-mean draw from the GP at the given points (jitter 1e−10·β).
pub fn sample_latent(h: &Hyperparams, xs: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = xs.len();
    let mut k = crate::kernel::cov_matrix(h, xs);
    for i in 0..n {
        k[[i, i]] += 1e-10 * h.beta;
    }
    let f = linalg::cholesky(&k).ok()?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let z: Vec<f64> = (0..n).map(|_| std_normal.sample(rng)).collect();
    let l = f.lower();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..=i {
            s += l[[i, j]] * z[j];
        }
        out[i] = s;
    }
    Some(out)
}

/// A single noisy GP-sampled lightcurve at fixed hyperparameters.
pub fn sample_gp_curve(
    h: &Hyperparams,
    n: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<LightCurve, crate::lightcurve::LightCurveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = draw_times(&mut rng, n, range);
    let f = sample_latent(h, &times, &mut rng).expect("kernel factorization");
    let noise = Normal::new(0.0, h.sigma2.sqrt()).expect("valid noise");
    let mags: Vec<f64> = f.iter().map(|v| v + noise.sample(&mut rng)).collect();
    LightCurve::new(format!("gp-fixed-{seed}"), times, mags, None)
}

/// GP corpus: `β, ℓ ~ U(0,3]`, period `p ~ U(0.5, 2.5]`, `w = 1/p`; the
/// latent is sampled jointly at the observation times and the evaluation
/// grid so reconstruction error can be scored against it.
pub fn gen_gp(spec: &SynthSpec) -> Vec<SynthSeries> {
    assert_eq!(spec.kind, SynthKind::Gp);
    (0..spec.n_series)
        .map(|i| gen_gp_one(spec, i))
        .collect()
}

fn gen_gp_one(spec: &SynthSpec, index: usize) -> SynthSeries {
    let grid = even_grid(spec.time_range, LATENT_GRID_POINTS);
    for attempt in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            spec.seed,
            (index as u64) * 1009 + attempt,
        ));
        // open-at-zero uniforms: 3 − U[0,3) ∈ (0,3]
        let beta = 3.0 - rng.random_range(0.0..3.0);
        let ell = 3.0 - rng.random_range(0.0..3.0);
        let period = 2.5 - rng.random_range(0.0..2.0);
        let h = Hyperparams {
            beta,
            w: 1.0 / period,
            ell,
            sigma2: spec.noise_var,
        };
        let times = draw_times(&mut rng, spec.n_samples, spec.time_range);
        // joint draw at observation times followed by the latent grid
        let mut all = times.clone();
        all.extend_from_slice(&grid);
        let Some(latent) = sample_latent(&h, &all, &mut rng) else {
            log::warn!("series {index}: kernel factorization failed, redrawing hyperparameters");
            continue;
        };
        let noise = Normal::new(0.0, spec.noise_var.sqrt()).expect("valid noise");
        let mags: Vec<f64> = latent[..times.len()]
            .iter()
            .map(|v| v + noise.sample(&mut rng))
            .collect();
        let lc = LightCurve::new(format!("gp-{index:04}"), times, mags, None)
            .expect("generated series is valid");
        return SynthSeries {
            lc,
            true_period: period,
            truth: Truth::Latent {
                xs: grid,
                fs: latent[spec.n_samples..].to_vec(),
            },
            gen_hyper: Some(h),
        };
    }
    panic!("could not draw a factorizable GP series after 100 attempts");
}

pub fn generate(spec: &SynthSpec) -> Vec<SynthSeries> {
    match spec.kind {
        SynthKind::Harmonic => gen_harmonic(spec),
        SynthKind::Gp => gen_gp(spec),
    }
}

/// A method entry in the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchMethod {
    Gp {
        criterion: Criterion,
        /// Cyclic iterations used for both stages (L₁ = L₂).
        iterations: usize,
        subsample: bool,
        lowrank: bool,
    },
    Ls,
    Pdm,
}

impl BenchMethod {
    pub fn gp_ml(iterations: usize) -> Self {
        BenchMethod::Gp {
            criterion: Criterion::Ml,
            iterations,
            subsample: false,
            lowrank: false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BenchMethod::Gp {
                criterion,
                iterations,
                subsample,
                lowrank,
            } => {
                let mut s = String::new();
                if *subsample {
                    s.push('s');
                }
                s.push_str("gp-");
                s.push_str(match criterion {
                    Criterion::Ml => "ml",
                    Criterion::Cv => "cv",
                });
                if *lowrank {
                    s.push_str("-lowr");
                }
                s.push_str(&format!("-{iterations}itr"));
                s
            }
            BenchMethod::Ls => "ls".into(),
            BenchMethod::Pdm => "pdm".into(),
        }
    }
}

/// One aggregated benchmark cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub method: String,
    pub n_samples: usize,
    pub hit_mean: f64,
    pub hit_std: f64,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub time_per_series_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub kind: SynthKind,
    pub n_series: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    /// One CSV row per (method, size) cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,n_samples,hit_mean,hit_std,rmse_mean,rmse_std,time_per_series_s\n",
        );
        for c in &self.cells {
            let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.method,
                c.n_samples,
                c.hit_mean,
                c.hit_std,
                fmt_opt(c.rmse_mean),
                fmt_opt(c.rmse_std),
                c.time_per_series_s
            ));
        }
        out
    }

    pub fn cell(&self, method: &str, n_samples: usize) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.n_samples == n_samples)
    }
}

/// Prefix-stable random subset: the size-n subset is the first n entries of
/// a per-(series, repetition) permutation, then sorted by time index.
pub fn subset_indices(total: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..total).collect();
    for i in (1..total).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut idx: Vec<usize> = perm[..n.min(total)].to_vec();
    idx.sort_unstable();
    idx
}

/// Estimate a period with one benchmark method. Returns the estimate and,
/// for GP methods, the hyperparameters backing the winning candidate.
pub fn run_method(
    method: &BenchMethod,
    lc: &LightCurve,
    seed: u64,
) -> Result<(f64, Option<Hyperparams>), SearchError> {
    match method {
        BenchMethod::Gp {
            criterion,
            iterations,
            subsample,
            lowrank,
        } => {
            let cfg = SearchConfig {
                criterion: *criterion,
                l1: *iterations,
                l2: *iterations,
                ..Default::default()
            };
            let plan = ScanPlan {
                coarse: if *subsample {
                    CoarseScan::Subsample(SubsampleConfig {
                        seed: derive_seed(seed, 0xE45),
                        ..Default::default()
                    })
                } else {
                    CoarseScan::Exact
                },
                fine: if *lowrank {
                    FineScan::EpsNet(LowRankConfig::default())
                } else {
                    FineScan::Exact
                },
            };
            let outcome = search::estimate_period_with(lc, &cfg, &plan, seed)?;
            Ok((
                outcome.candidates.items[0].period,
                Some(outcome.hyper),
            ))
        }
        BenchMethod::Ls => {
            let cfg = SearchConfig::default();
            let grid = search::build_coarse_grid(lc, &cfg)?;
            let cand = baselines::baseline_estimate(lc, BaselineMethod::Ls, &grid, 10);
            cand.items
                .first()
                .map(|e| (e.period, None))
                .ok_or(SearchError::NoFiniteScores)
        }
        BenchMethod::Pdm => {
            let grid = search::FrequencyGrid::from_range(0.02, 5.0, 0.001)?;
            let cand = baselines::baseline_estimate(lc, BaselineMethod::Pdm, &grid, 10);
            cand.items
                .first()
                .map(|e| (e.period, None))
                .ok_or(SearchError::NoFiniteScores)
        }
    }
}

/// Posterior-mean reconstruction RMSE against the true latent curve.
fn reconstruction_rmse(lc: &LightCurve, hyper: &Hyperparams, series: &SynthSeries, range: (f64, f64)) -> Option<f64> {
    let (xs, fs) = series.truth.curve(range);
    let (_, fit) = gp::log_marginal_likelihood(lc, hyper).ok()?;
    let (means, _) = fit.predict(lc, &xs);
    let mse = means
        .iter()
        .zip(&fs)
        .map(|(m, f)| (m - f) * (m - f))
        .sum::<f64>()
        / xs.len() as f64;
    Some(mse.sqrt())
}

/// Run every (method, size, repetition) cell over a generated corpus.
///
/// Each repetition draws fresh prefix-stable subsets of each series, so the
/// cell statistics are means and standard deviations across repetitions.
pub fn run_benchmark(
    spec: &SynthSpec,
    methods: &[BenchMethod],
    sizes: &[usize],
    repetitions: usize,
) -> BenchReport {
    assert!(!methods.is_empty(), "need at least one method");
    assert!(repetitions >= 1);
    let corpus = generate(spec);
    let mut cells = Vec::new();

    for method in methods {
        for &size in sizes {
            // (rep, series) jobs are independent; results keyed by index.
            let jobs: Vec<(usize, usize)> = (0..repetitions)
                .flat_map(|r| (0..corpus.len()).map(move |s| (r, s)))
                .collect();
            let results: Vec<(usize, bool, Option<f64>, f64)> = jobs
                .par_iter()
                .map(|&(rep, si)| {
                    let series = &corpus[si];
                    let run_seed = derive_seed(
                        spec.seed,
                        0xBEEF ^ ((rep as u64) << 32) ^ (si as u64) << 8 ^ size as u64,
                    );
                    let idx = subset_indices(
                        series.lc.len(),
                        size,
                        derive_seed(spec.seed, 0x5B5 ^ ((rep as u64) << 20) ^ si as u64),
                    );
                    let sub = series.lc.subset(&idx).expect("subset is valid");
                    let t0 = std::time::Instant::now();
                    let outcome = run_method(method, &sub, run_seed);
                    let dt = t0.elapsed().as_secs_f64();
                    match outcome {
                        Ok((p_hat, hyper)) => {
                            let hit = accuracy_hit(p_hat, series.true_period, 0.01);
                            let rmse = match (&hyper, spec.kind) {
                                (Some(h), SynthKind::Gp) => reconstruction_rmse(
                                    &sub,
                                    h,
                                    series,
                                    spec.time_range,
                                ),
                                _ => None,
                            };
                            (rep, hit, rmse, dt)
                        }
                        Err(_) => (rep, false, None, dt),
                    }
                })
                .collect();

            // aggregate per repetition, then mean/std across repetitions
            let mut hit_by_rep = vec![0.0f64; repetitions];
            let mut rmse_by_rep: Vec<Vec<f64>> = vec![Vec::new(); repetitions];
            let mut total_time = 0.0;
            for (rep, hit, rmse, dt) in &results {
                if *hit {
                    hit_by_rep[*rep] += 1.0;
                }
                if let Some(r) = rmse {
                    rmse_by_rep[*rep].push(*r);
                }
                total_time += dt;
            }
            for h in hit_by_rep.iter_mut() {
                *h /= corpus.len() as f64;
            }
            let (hit_mean, hit_std) = mean_std(&hit_by_rep);
            let rep_rmse: Vec<f64> = rmse_by_rep
                .iter()
                .filter(|v| !v.is_empty())
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            let (rmse_mean, rmse_std) = if rep_rmse.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&rep_rmse);
                (Some(m), Some(s))
            };
            cells.push(BenchCell {
                method: method.label(),
                n_samples: size,
                hit_mean,
                hit_std,
                rmse_mean,
                rmse_std,
                time_per_series_s: total_time / results.len() as f64,
            });
        }
    }

    BenchReport {
        kind: spec.kind,
        n_series: spec.n_series,
        repetitions,
        seed: spec.seed,
        cells,
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_noiseless_matches_closed_form() {
        let spec = SynthSpec {
            kind: SynthKind::Harmonic,
            n_series: 3,
            n_samples: 40,
            noise_var: 1e-12,
            seed: 5,
            ..Default::default()
        };
        for s in gen_harmonic(&spec) {
            let Truth::Harmonic { a, b, omega, phi1, phi2 } = s.truth else {
                panic!("wrong truth kind")
            };
            for (x, y) in s.lc.times().iter().zip(s.lc.mags()) {
                let f = a * (omega * x + phi1).sin() + b * (omega * x + phi2).cos();
                assert!((y - f).abs() <= 1e-5, "{y} vs {f}");
            }
        }
    }

    #[test]
    fn harmonic_periods_in_range() {
        let spec = SynthSpec {
            kind: SynthKind::Harmonic,
            n_series: 40,
            n_samples: 10,
            seed: 6,
            ..Default::default()
        };
        for s in gen_harmonic(&spec) {
            // ω ∈ (1,4) → p ∈ (π/2, 2π)
            assert!(s.true_period > std::f64::consts::FRAC_PI_2);
            assert!(s.true_period < 2.0 * std::f64::consts::PI);
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = SynthSpec {
            kind: SynthKind::Harmonic,
            n_series: 4,
            n_samples: 20,
            seed: 7,
            ..Default::default()
        };
        let a = gen_harmonic(&spec);
        let b = gen_harmonic(&spec);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.lc, y.lc);
            assert_eq!(x.true_period, y.true_period);
        }
        let spec_gp = SynthSpec {
            kind: SynthKind::Gp,
            n_series: 3,
            n_samples: 25,
            seed: 8,
            ..Default::default()
        };
        let a = gen_gp(&spec_gp);
        let b = gen_gp(&spec_gp);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.lc, y.lc);
        }
    }

    #[test]
    fn gp_zero_noise_period_apart_points_match() {
        let h = Hyperparams::new(1.5, 0.5, 1.0, 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // two points exactly one period apart
        let xs = [0.3, 0.3 + 1.0 / h.w];
        let f = sample_latent(&h, &xs, &mut rng).unwrap();
        assert!((f[0] - f[1]).abs() < 1e-4, "{} vs {}", f[0], f[1]);
    }

    #[test]
    fn gp_sample_covariance_converges_to_kernel() {
        // Monte-Carlo oracle: sample covariance over 10⁴ draws at 5 fixed
        // points approaches K within 10% Frobenius.
        let h = Hyperparams::new(1.2, 0.4, 0.9, 0.1).unwrap();
        let xs = [0.0, 0.7, 1.9, 3.2, 4.4];
        let k = crate::kernel::cov_matrix(&h, &xs);
        let draws = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut acc = vec![0.0; 25];
        for _ in 0..draws {
            let f = sample_latent(&h, &xs, &mut rng).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    acc[i * 5 + j] += f[i] * f[j];
                }
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let s = acc[i * 5 + j] / draws as f64;
                let d = s - k[[i, j]];
                num += d * d;
                den += k[[i, j]] * k[[i, j]];
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.10, "relative Frobenius error {rel}");
    }

    #[test]
    fn subset_indices_prefix_stable() {
        let a = subset_indices(100, 30, 42);
        let b = subset_indices(100, 60, 42);
        // the size-30 subset is a subset of the size-60 one
        for i in &a {
            assert!(b.contains(i));
        }
        assert_eq!(a.len(), 30);
        assert_eq!(b.len(), 60);
    }

    #[test]
    fn benchmark_hopeless_method_scores_zero() {
        // A method that always answers period 10⁶ has hit rate 0.
        let spec = SynthSpec {
            kind: SynthKind::Harmonic,
            n_series: 5,
            n_samples: 30,
            seed: 11,
            ..Default::default()
        };
        let corpus = generate(&spec);
        let hits = corpus
            .iter()
            .filter(|s| accuracy_hit(1e6, s.true_period, 0.01))
            .count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn benchmark_report_csv_shape() {
        let spec = SynthSpec {
            kind: SynthKind::Harmonic,
            n_series: 3,
            n_samples: 24,
            seed: 12,
            ..Default::default()
        };
        let report = run_benchmark(&spec, &[BenchMethod::Ls, BenchMethod::Pdm], &[12, 24], 2);
        assert_eq!(report.cells.len(), 4);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("method,n_samples"));
        for c in &report.cells {
            assert!((0.0..=1.0).contains(&c.hit_mean));
            assert!(c.hit_std >= 0.0);
        }
    }

    #[test]
    fn benchmark_deterministic_modulo_timing() {
        let spec = SynthSpec {
            kind: SynthKind::Harmonic,
            n_series: 3,
            n_samples: 20,
            seed: 13,
            ..Default::default()
        };
        let a = run_benchmark(&spec, &[BenchMethod::Ls], &[10, 20], 2);
        let b = run_benchmark(&spec, &[BenchMethod::Ls], &[10, 20], 2);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.method, y.method);
            assert_eq!(x.hit_mean, y.hit_mean);
            assert_eq!(x.hit_std, y.hit_std);
        }
    }
}
