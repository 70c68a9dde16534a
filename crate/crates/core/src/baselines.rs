//! Classical comparison methods: the Lomb–Scargle periodogram and phase
//! dispersion minimization.
//!
//! Public frequencies are ordinary (cycles per time unit) everywhere; the
//! angular ω = 2πf conversion happens inside the LS evaluation only.

use crate::lightcurve::{CandidateList, LightCurve, MethodKind, PeriodEstimate};
use crate::search::FrequencyGrid;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Ls,
    Pdm,
}

/// Scores of trial frequencies under one baseline criterion.
#[derive(Debug, Clone)]
pub struct Periodogram {
    pub grid: FrequencyGrid,
    pub power: Vec<f64>,
}

/// Lomb–Scargle periodogram.
///
/// Per ω = 2πf: τ from `tan(2ωτ) = Σsin(2ωx)/Σcos(2ωx)`, then with
/// `η_j = ω(x_j − τ)`,
/// `P = ½·([Σ y cosη]²/Σcos²η + [Σ y sinη]²/Σsin²η)`.
/// The magnitudes are mean-subtracted internally. Higher is better.
pub fn lomb_scargle(lc: &LightCurve, grid: &FrequencyGrid) -> Periodogram {
    assert!(lc.len() >= 3, "Lomb–Scargle needs at least 3 points");
    let mean = lc.mean_mag();
    let y: Vec<f64> = lc.mags().iter().map(|v| v - mean).collect();
    let times = lc.times();
    let power: Vec<f64> = grid
        .values()
        .par_iter()
        .map(|&f| {
            let omega = 2.0 * std::f64::consts::PI * f;
            let (mut s2, mut c2) = (0.0, 0.0);
            for &x in times {
                let (s, c) = (2.0 * omega * x).sin_cos();
                s2 += s;
                c2 += c;
            }
            let tau = s2.atan2(c2) / (2.0 * omega);
            let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for (&x, &v) in times.iter().zip(&y) {
                let (s, c) = (omega * (x - tau)).sin_cos();
                yc += v * c;
                ys += v * s;
                cc += c * c;
                ss += s * s;
            }
            let term = |num: f64, den: f64| if den > 1e-300 { num * num / den } else { 0.0 };
            0.5 * (term(yc, cc) + term(ys, ss))
        })
        .collect();
    Periodogram {
        grid: grid.clone(),
        power,
    }
}

/// Phase dispersion minimization.
///
/// Fold at each trial period, split phases into `bins` equal-width bins and
/// sum the unbiased within-bin variances over bins holding ≥ 2 points.
/// Lower is better.
pub fn pdm(lc: &LightCurve, grid: &FrequencyGrid, bins: usize) -> Periodogram {
    assert!(bins >= 1, "need at least one bin");
    let mean = lc.mean_mag();
    let y: Vec<f64> = lc.mags().iter().map(|v| v - mean).collect();
    let times = lc.times();
    let t0 = times[0];
    let power: Vec<f64> = grid
        .values()
        .par_iter()
        .map_init(
            || (vec![0usize; bins], vec![0.0f64; bins], vec![0.0f64; bins]),
            |(count, sum, sumsq), &f| {
                count.fill(0);
                sum.fill(0.0);
                sumsq.fill(0.0);
                let period = 1.0 / f;
                for (&t, &v) in times.iter().zip(y.iter()) {
                    let mut ph = ((t - t0) / period).fract();
                    if ph < 0.0 {
                        ph += 1.0;
                    }
                    let mut b = (ph * bins as f64) as usize;
                    if b >= bins {
                        b = bins - 1;
                    }
                    count[b] += 1;
                    sum[b] += v;
                    sumsq[b] += v * v;
                }
                let mut score = 0.0;
                for b in 0..bins {
                    if count[b] >= 2 {
                        let n = count[b] as f64;
                        let var = (sumsq[b] - sum[b] * sum[b] / n) / (n - 1.0);
                        score += var.max(0.0);
                    }
                }
                score
            },
        )
        .collect();
    Periodogram {
        grid: grid.clone(),
        power,
    }
}

fn scan(lc: &LightCurve, method: BaselineMethod, grid: &FrequencyGrid) -> Periodogram {
    match method {
        BaselineMethod::Ls => lomb_scargle(lc, grid),
        BaselineMethod::Pdm => pdm(lc, grid, 15),
    }
}

fn rank_indices(pg: &Periodogram, method: BaselineMethod, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pg.power.len())
        .filter(|&i| pg.power[i].is_finite())
        .collect();
    idx.sort_by(|&a, &b| {
        let ord = match method {
            BaselineMethod::Ls => pg.power[b].total_cmp(&pg.power[a]),
            BaselineMethod::Pdm => pg.power[a].total_cmp(&pg.power[b]),
        };
        ord.then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Ranked candidates from a baseline scan (max for LS, min for PDM), in the
/// same shape as the GP path so filters compose.
///
/// Each retained peak is refined by a dense re-scan of its one-step
/// neighborhood; the input grid sets the coarse resolution only, so the
/// reported frequency is not quantized to it.
pub fn baseline_estimate(
    lc: &LightCurve,
    method: BaselineMethod,
    grid: &FrequencyGrid,
    top_k: usize,
) -> CandidateList {
    let pg = scan(lc, method, grid);
    let kind = match method {
        BaselineMethod::Ls => MethodKind::Ls,
        BaselineMethod::Pdm => MethodKind::Pdm,
    };
    let idx = rank_indices(&pg, method, top_k);
    let step = if grid.len() >= 2 {
        grid.values()[1] - grid.values()[0]
    } else {
        0.0
    };
    let mut refined: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| {
            let f0 = pg.grid.values()[i];
            if step <= 0.0 {
                return (f0, pg.power[i]);
            }
            let local = crate::search::build_fine_grid(&[f0], step, step / 50.0);
            let lp = scan(lc, method, &local);
            let li = rank_indices(&lp, method, 1);
            match li.first() {
                Some(&j) => (lp.grid.values()[j], lp.power[j]),
                None => (f0, pg.power[i]),
            }
        })
        .collect();
    refined.sort_by(|a, b| {
        let ord = match method {
            BaselineMethod::Ls => b.1.total_cmp(&a.1),
            BaselineMethod::Pdm => a.1.total_cmp(&b.1),
        };
        ord.then(a.0.total_cmp(&b.0))
    });
    let items: Vec<PeriodEstimate> = refined
        .iter()
        .enumerate()
        .map(|(rank, &(f, s))| PeriodEstimate::from_frequency(f, s, kind, rank + 1))
        .collect();
    let finite: Vec<f64> = pg.power.iter().copied().filter(|v| v.is_finite()).collect();
    let degenerate = finite.is_empty()
        || finite
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
            == (finite[0], finite[0]);
    CandidateList { items, degenerate }
}
