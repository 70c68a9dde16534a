//! GP model-selection scores: log marginal likelihood, its gradient, the
//! closed-form leave-one-out error, and the posterior predictive.
//!
//! The GP prior has zero mean, so the sample mean of the magnitudes is
//! subtracted before scoring and added back in prediction. The zero-mean
//! entry points (`lml_zero_mean` etc.) skip that step for callers that
//! center their own data.

use crate::kernel::{self, Hyperparams, PairwiseDeltas};
use crate::lightcurve::LightCurve;
use crate::linalg::{
    cholesky_in_place, inv_lower_raw, logdet_raw, solve_lower_raw, solve_lower_t_raw,
    CholeskyFactor,
};
use ndarray::Array2;
use thiserror::Error;

pub(crate) const LN_2PI: f64 = 1.8378770664093453;

/// Relative jitter added to the diagonal on a failed factorization before
/// the hyperparameter point is rejected.
pub const JITTER_REL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("kernel matrix not positive definite after jitter retry")]
    NotPositiveDefinite,
    #[error("series has {n} points, need at least {need}")]
    TooFewPoints { n: usize, need: usize },
    #[error(transparent)]
    InvalidHyperparams(#[from] kernel::InvalidHyperparam),
}

/// A fitted GP at fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct GpFit {
    pub hyper: Hyperparams,
    /// Factor of `K + σ²I` (with jitter if the first attempt failed).
    pub chol: CholeskyFactor,
    /// `(K + σ²I)⁻¹ ŷ` for the centered observations ŷ.
    pub alpha: Vec<f64>,
    pub lml: f64,
    /// Mean subtracted from the magnitudes before fitting.
    pub mean: f64,
}

/// Reusable buffers for repeated scoring at different hyperparameters.
/// One per worker thread; nothing here affects results.
pub(crate) struct Workspace {
    n: usize,
    gram: Vec<f64>,
    linv: Vec<f64>,
    vec: Vec<f64>,
    diag: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            gram: vec![0.0; n * n],
            linv: vec![0.0; n * n],
            vec: vec![0.0; n],
            diag: vec![0.0; n],
        }
    }

    /// Fill `K + σ²I` and factor it in place, retrying once with jitter.
    /// On success `self.gram` holds the lower-triangular factor.
    pub(crate) fn factor(&mut self, deltas: &PairwiseDeltas, h: &Hyperparams) -> Result<(), GpError> {
        let n = self.n;
        debug_assert_eq!(deltas.n(), n);
        deltas.fill_cov_sigma(h, &mut self.gram);
        if cholesky_in_place(&mut self.gram, n).is_ok() {
            return Ok(());
        }
        deltas.fill_cov_sigma(h, &mut self.gram);
        let jitter = JITTER_REL * h.beta;
        for i in 0..n {
            self.gram[i * n + i] += jitter;
        }
        cholesky_in_place(&mut self.gram, n).map_err(|_| GpError::NotPositiveDefinite)
    }

    /// Log marginal likelihood given a factored gram; `y` must be centered.
    pub(crate) fn lml_from_factor(&mut self, y: &[f64]) -> f64 {
        let n = self.n;
        self.vec.copy_from_slice(y);
        solve_lower_raw(&self.gram, n, &mut self.vec);
        solve_lower_t_raw(&self.gram, n, &mut self.vec);
        let quad: f64 = y.iter().zip(&self.vec).map(|(a, b)| a * b).sum();
        -0.5 * quad - 0.5 * logdet_raw(&self.gram, n) - 0.5 * n as f64 * LN_2PI
    }

    /// Leave-one-out squared error given a factored gram; `y` centered.
    pub(crate) fn loo_from_factor(&mut self, y: &[f64]) -> f64 {
        let n = self.n;
        self.vec.copy_from_slice(y);
        solve_lower_raw(&self.gram, n, &mut self.vec);
        solve_lower_t_raw(&self.gram, n, &mut self.vec);
        inv_lower_raw(&self.gram, n, &mut self.linv);
        for i in 0..n {
            let mut d = 0.0;
            for k in i..n {
                let v = self.linv[k * n + i];
                d += v * v;
            }
            self.diag[i] = d;
        }
        let mut score = 0.0;
        for i in 0..n {
            let r = self.vec[i] / self.diag[i];
            score += r * r;
        }
        score
    }

    /// Score one hyperparameter point, mapping SPD failure to the sentinel
    /// (−∞ for ML which is maximized, +∞ for CV which is minimized).
    pub(crate) fn score(
        &mut self,
        deltas: &PairwiseDeltas,
        h: &Hyperparams,
        y: &[f64],
        which: ScoreWhich,
    ) -> f64 {
        if self.factor(deltas, h).is_err() {
            return match which {
                ScoreWhich::Ml => f64::NEG_INFINITY,
                ScoreWhich::Cv => f64::INFINITY,
            };
        }
        match which {
            ScoreWhich::Ml => self.lml_from_factor(y),
            ScoreWhich::Cv => self.loo_from_factor(y),
        }
    }

    /// LML and its gradient w.r.t. (β, w, ℓ, σ²) in one pass.
    ///
    /// Gradient component j is `½·Tr((ααᵀ − K_σ⁻¹)·∂K_σ/∂θ_j)`.
    pub(crate) fn lml_and_grad(
        &mut self,
        deltas: &PairwiseDeltas,
        h: &Hyperparams,
        y: &[f64],
    ) -> Result<(f64, [f64; 4]), GpError> {
        let n = self.n;
        self.factor(deltas, h)?;
        let lml = self.lml_from_factor(y);
        // self.vec now holds α
        inv_lower_raw(&self.gram, n, &mut self.linv);
        // B = ααᵀ − K⁻¹ with K⁻¹ = MᵀM, M = L⁻¹; accumulate traces pairwise.
        let alpha = &self.vec;
        let kinv_entry = |i: usize, j: usize, m: &[f64]| -> f64 {
            let lo = i.max(j);
            let mut s = 0.0;
            for k in lo..n {
                s += m[k * n + i] * m[k * n + j];
            }
            s
        };
        let mut g_beta = 0.0;
        let mut g_w = 0.0;
        let mut g_ell = 0.0;
        let mut g_sigma2 = 0.0;
        let wpi = h.w * std::f64::consts::PI;
        let c = -2.0 / (h.ell * h.ell);
        let l3 = h.ell * h.ell * h.ell;
        let l2 = h.ell * h.ell;
        let times_diff = DeltaIter::new(deltas);
        for (i, j, d) in times_diff {
            let b_ij = alpha[i] * alpha[j] - kinv_entry(i, j, &self.linv);
            let s = (wpi * d).sin();
            let co = (wpi * d).cos();
            let e = h.beta * (c * (s * s)).exp();
            // off-diagonal entries count twice in the trace
            g_beta += 2.0 * b_ij * (e / h.beta);
            g_w += 2.0 * b_ij * e * (-4.0 * std::f64::consts::PI * d * s * co / l2);
            g_ell += 2.0 * b_ij * e * (4.0 * s * s / l3);
        }
        for i in 0..n {
            let b_ii = alpha[i] * alpha[i] - kinv_entry(i, i, &self.linv);
            g_beta += b_ii; // diagonal of ∂K/∂β is 1
            g_sigma2 += b_ii;
        }
        Ok((lml, [0.5 * g_beta, 0.5 * g_w, 0.5 * g_ell, 0.5 * g_sigma2]))
    }

    pub(crate) fn take_factor(&self) -> CholeskyFactor {
        CholeskyFactor::from_lower_unchecked(
            Array2::from_shape_vec((self.n, self.n), self.gram.clone()).expect("shape"),
        )
    }
}

/// Iterator over the cached lower-triangle deltas with their (i, j) indices.
struct DeltaIter<'a> {
    deltas: &'a PairwiseDeltas,
    i: usize,
    j: usize,
    idx: usize,
}

impl<'a> DeltaIter<'a> {
    fn new(deltas: &'a PairwiseDeltas) -> Self {
        Self { deltas, i: 1, j: 0, idx: 0 }
    }
}

impl Iterator for DeltaIter<'_> {
    type Item = (usize, usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.i >= self.deltas.n() {
            return None;
        }
        let out = (self.i, self.j, self.deltas.get(self.idx));
        self.idx += 1;
        self.j += 1;
        if self.j == self.i {
            self.i += 1;
            self.j = 0;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ScoreWhich {
    Ml,
    Cv,
}

fn centered(lc: &LightCurve) -> (Vec<f64>, f64) {
    let mean = lc.mean_mag();
    (lc.mags().iter().map(|y| y - mean).collect(), mean)
}

/// Log marginal likelihood of a zero-mean GP for pre-centered data.
pub fn lml_zero_mean(times: &[f64], y: &[f64], h: &Hyperparams) -> Result<f64, GpError> {
    assert_eq!(times.len(), y.len());
    h.validate()?;
    let deltas = PairwiseDeltas::new(times);
    let mut ws = Workspace::new(times.len());
    ws.factor(&deltas, h)?;
    Ok(ws.lml_from_factor(y))
}

/// Log marginal likelihood of the centered series, with the fitted model.
pub fn log_marginal_likelihood(lc: &LightCurve, h: &Hyperparams) -> Result<(f64, GpFit), GpError> {
    let n = lc.len();
    if n < 2 {
        return Err(GpError::TooFewPoints { n, need: 2 });
    }
    h.validate()?;
    let (y, mean) = centered(lc);
    let deltas = PairwiseDeltas::new(lc.times());
    let mut ws = Workspace::new(n);
    ws.factor(&deltas, h)?;
    let lml = ws.lml_from_factor(&y);
    let alpha = ws.vec.clone();
    Ok((
        lml,
        GpFit {
            hyper: *h,
            chol: ws.take_factor(),
            alpha,
            lml,
            mean,
        },
    ))
}

/// Gradient of the log marginal likelihood w.r.t. (β, w, ℓ, σ²).
pub fn lml_gradient(lc: &LightCurve, h: &Hyperparams) -> Result<[f64; 4], GpError> {
    let n = lc.len();
    if n < 2 {
        return Err(GpError::TooFewPoints { n, need: 2 });
    }
    h.validate()?;
    let (y, _) = centered(lc);
    let deltas = PairwiseDeltas::new(lc.times());
    let mut ws = Workspace::new(n);
    let (_, grad) = ws.lml_and_grad(&deltas, h, &y)?;
    Ok(grad)
}

/// Leave-one-out CV squared error via the closed-form shortcut
/// `r_i = [K_σ⁻¹ŷ]_i / [K_σ⁻¹]_ii`; lower is better.
pub fn loo_cv_error(lc: &LightCurve, h: &Hyperparams) -> Result<f64, GpError> {
    let n = lc.len();
    if n < 3 {
        return Err(GpError::TooFewPoints { n, need: 3 });
    }
    h.validate()?;
    let (y, _) = centered(lc);
    let deltas = PairwiseDeltas::new(lc.times());
    let mut ws = Workspace::new(n);
    ws.factor(&deltas, h)?;
    Ok(ws.loo_from_factor(&y))
}

impl GpFit {
    /// Posterior predictive mean and variance at the query points.
    ///
    /// `lc` must be the series the fit was built from. Variances are latent
    /// (no σ²) and clamped at zero.
    pub fn predict(&self, lc: &LightCurve, xstar: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = lc.len();
        assert_eq!(n, self.alpha.len(), "fit does not match series");
        let mut means = Vec::with_capacity(xstar.len());
        let mut vars = Vec::with_capacity(xstar.len());
        let mut kvec = vec![0.0; n];
        for &x in xstar {
            for (j, &t) in lc.times().iter().enumerate() {
                kvec[j] = kernel::cov(&self.hyper, x, t);
            }
            let mean: f64 = kvec.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
            let z = self.chol.solve_lower(&kvec);
            let var = self.hyper.beta - z.iter().map(|v| v * v).sum::<f64>();
            means.push(mean + self.mean);
            vars.push(var.max(0.0));
        }
        (means, vars)
    }
}

/// Criterion score from an existing factor of `K_σ` (the shifted fine-scan
/// points arrive this way). `y` must be centered.
pub(crate) fn score_from_factor(chol: &CholeskyFactor, y: &[f64], which: ScoreWhich) -> f64 {
    let n = chol.n();
    let alpha = chol.solve_system(y);
    match which {
        ScoreWhich::Ml => {
            let quad: f64 = y.iter().zip(&alpha).map(|(a, b)| a * b).sum();
            -0.5 * quad - 0.5 * chol.logdet() - 0.5 * n as f64 * LN_2PI
        }
        ScoreWhich::Cv => {
            let d = chol.inv_diagonal();
            alpha
                .iter()
                .zip(&d)
                .map(|(a, di)| {
                    let r = a / di;
                    r * r
                })
                .sum()
        }
    }
}

/// Factor `K + σ²I` for a series, with the standard jitter retry.
pub fn factor_kernel(times: &[f64], h: &Hyperparams) -> Result<CholeskyFactor, GpError> {
    let deltas = PairwiseDeltas::new(times);
    let mut ws = Workspace::new(times.len());
    ws.factor(&deltas, h)?;
    Ok(ws.take_factor())
}

/// Convenience wrapper kept close to its users in the scan code paths.
pub(crate) fn which_from(criterion: crate::search::Criterion) -> ScoreWhich {
    match criterion {
        crate::search::Criterion::Ml => ScoreWhich::Ml,
        crate::search::Criterion::Cv => ScoreWhich::Cv,
    }
}
