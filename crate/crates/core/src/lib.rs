//! Period estimation for irregularly sampled, noisy time series.
//!
//! The model is a zero-mean Gaussian process with a periodic covariance
//! function; period estimation is model selection over its frequency
//! hyperparameter. Because the likelihood surface has numerous local maxima
//! in frequency, the search combines conjugate-gradient optimization of the
//! nuisance hyperparameters with a two-level (coarse → fine) frequency grid
//! scan, optionally accelerated by ensemble subsampling and low-rank
//! Cholesky-update approximations. Classical Lomb–Scargle and phase
//! dispersion minimization baselines and a pluggable domain-prior layer
//! round out the toolkit.

pub mod baselines;
pub mod fastpath;
pub mod gp;
pub mod kernel;
pub mod lightcurve;
pub mod linalg;
pub mod priors;
pub mod search;
pub mod synth;

pub use baselines::{baseline_estimate, lomb_scargle, pdm, BaselineMethod, Periodogram};
pub use fastpath::{
    epsnet_fine_scan, lowrank_chol_shift, subsample_ensemble_score, LowRankConfig,
    SubsampleConfig,
};
pub use gp::{log_marginal_likelihood, loo_cv_error, lml_gradient, GpError, GpFit};
pub use kernel::{cov, cov_grad, cov_matrix, HyperParam, Hyperparams};
pub use lightcurve::{
    accuracy_hit, fold, load_lightcurve, CandidateList, Format, LightCurve, LightCurveError,
    MethodKind, PeriodEstimate, PhasedCurve,
};
pub use linalg::{cholesky, sym_eigen, CholeskyFactor, EigenPairs, LinalgError, UpdateSign};
pub use priors::{
    combine_methods, double_period_filter, estimate_period_map, filter_select, map_score,
    PeriodScorer, ReferenceScorer,
};
pub use search::{
    build_coarse_grid, build_fine_grid, estimate_period, estimate_period_with, grid_scan,
    optimize_nuisance, CoarseScan, Criterion, FineScan, FrequencyGrid, ScanPlan, ScoreTable,
    SearchConfig, SearchError, SearchOutcome,
};
pub use synth::{
    gen_gp, gen_harmonic, generate, run_benchmark, BenchMethod, BenchReport, SynthKind,
    SynthSeries, SynthSpec, Truth,
};

/// Derive an independent stream seed from a base seed (splitmix64 step).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
