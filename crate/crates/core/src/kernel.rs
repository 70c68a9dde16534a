//! Periodic covariance function, Gram matrices, and analytic derivatives
//! with respect to each hyperparameter.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kernel hyperparameters plus the observation noise variance.
///
/// `w` is an ordinary frequency (cycles per time unit); the implied period is
/// `1/w`. Gradients everywhere are with respect to these raw values; any
/// log-reparameterization is the optimizer's business.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Signal variance β.
    pub beta: f64,
    /// Frequency w (cycles per time unit).
    pub w: f64,
    /// Characteristic length ℓ.
    pub ell: f64,
    /// Noise variance σ².
    pub sigma2: f64,
}

#[derive(Debug, Error)]
#[error("hyperparameter {name} = {value} must be strictly positive and finite")]
pub struct InvalidHyperparam {
    pub name: &'static str,
    pub value: f64,
}

impl Hyperparams {
    pub fn new(beta: f64, w: f64, ell: f64, sigma2: f64) -> Result<Self, InvalidHyperparam> {
        let h = Self {
            beta,
            w,
            ell,
            sigma2,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), InvalidHyperparam> {
        for (name, value) in [
            ("beta", self.beta),
            ("w", self.w),
            ("ell", self.ell),
            ("sigma2", self.sigma2),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(InvalidHyperparam { name, value });
            }
        }
        Ok(())
    }

    pub fn with_w(&self, w: f64) -> Self {
        Self { w, ..*self }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.w
    }
}

/// Parameter selector for `cov_grad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperParam {
    Beta,
    W,
    Ell,
    Sigma2,
}

pub const ALL_PARAMS: [HyperParam; 4] = [
    HyperParam::Beta,
    HyperParam::W,
    HyperParam::Ell,
    HyperParam::Sigma2,
];

/// Covariance between two sample points: `β·exp(−2·sin²(wπ(xi−xj))/ℓ²)`.
///
/// The noise term σ² is *not* included; callers add it on the diagonal.
/// The arithmetic matches `PairwiseDeltas::fill_cov_sigma` operation for
/// operation so both paths round identically.
pub fn cov(h: &Hyperparams, xi: f64, xj: f64) -> f64 {
    let s = (h.w * std::f64::consts::PI * (xi - xj)).sin();
    let c = -2.0 / (h.ell * h.ell);
    h.beta * (c * (s * s)).exp()
}

/// Dense Gram matrix of `cov` over all pairs; symmetric, diagonal exactly β.
pub fn cov_matrix(h: &Hyperparams, times: &[f64]) -> Array2<f64> {
    let n = times.len();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = h.beta;
        for j in 0..i {
            let v = cov(h, times[i], times[j]);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Elementwise partial derivative of `K_σ = K + σ²I` with respect to one
/// hyperparameter:
///
/// * β:  `K/β`
/// * ℓ:  `K · 4 sin²(wπΔ)/ℓ³`
/// * w:  `K · (−4πΔ·sin(wπΔ)cos(wπΔ)/ℓ²)`
/// * σ²: `I`
pub fn cov_grad(h: &Hyperparams, times: &[f64], param: HyperParam) -> Array2<f64> {
    let n = times.len();
    let mut g = Array2::zeros((n, n));
    match param {
        HyperParam::Beta => {
            for i in 0..n {
                g[[i, i]] = 1.0;
                for j in 0..i {
                    let v = cov(h, times[i], times[j]) / h.beta;
                    g[[i, j]] = v;
                    g[[j, i]] = v;
                }
            }
        }
        HyperParam::Ell => {
            let l3 = h.ell * h.ell * h.ell;
            for i in 0..n {
                for j in 0..i {
                    let s = (h.w * std::f64::consts::PI * (times[i] - times[j])).sin();
                    let v = cov(h, times[i], times[j]) * 4.0 * s * s / l3;
                    g[[i, j]] = v;
                    g[[j, i]] = v;
                }
            }
        }
        HyperParam::W => {
            let l2 = h.ell * h.ell;
            for i in 0..n {
                for j in 0..i {
                    let d = times[i] - times[j];
                    let arg = h.w * std::f64::consts::PI * d;
                    let v = cov(h, times[i], times[j])
                        * (-4.0 * std::f64::consts::PI * d * arg.sin() * arg.cos() / l2);
                    g[[i, j]] = v;
                    g[[j, i]] = v;
                }
            }
        }
        HyperParam::Sigma2 => {
            for i in 0..n {
                g[[i, i]] = 1.0;
            }
        }
    }
    g
}

/// Pairwise time differences cached once per series for repeated Gram builds.
///
/// Row-major lower triangle (i > j) plus helpers that fill a caller-owned
/// `n × n` buffer, so grid scans do no per-frequency allocation.
#[derive(Debug, Clone)]
pub struct PairwiseDeltas {
    n: usize,
    // deltas[i*(i-1)/2 + j] = times[i] - times[j], j < i
    deltas: Vec<f64>,
}

impl PairwiseDeltas {
    pub fn new(times: &[f64]) -> Self {
        let n = times.len();
        let mut deltas = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in 0..i {
                deltas.push(times[i] - times[j]);
            }
        }
        Self { n, deltas }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Lower-triangle delta by flat index (`i*(i-1)/2 + j` for `j < i`).
    pub(crate) fn get(&self, idx: usize) -> f64 {
        self.deltas[idx]
    }

    /// Fill `buf` (row-major n×n) with `K + σ²I` for the given hyperparameters.
    pub fn fill_cov_sigma(&self, h: &Hyperparams, buf: &mut [f64]) {
        let n = self.n;
        assert_eq!(buf.len(), n * n);
        let c = -2.0 / (h.ell * h.ell);
        let wpi = h.w * std::f64::consts::PI;
        let mut idx = 0;
        for i in 0..n {
            for j in 0..i {
                let s = (wpi * self.deltas[idx]).sin();
                let v = h.beta * (c * (s * s)).exp();
                buf[i * n + j] = v;
                buf[j * n + i] = v;
                idx += 1;
            }
            buf[i * n + i] = h.beta + h.sigma2;
        }
    }
}
