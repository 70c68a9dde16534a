//! The full period-estimation pipeline: frequency grids, conjugate-gradient
//! optimization of the nuisance hyperparameters, cyclic alternation with a
//! two-level (coarse → fine) grid scan, and candidate ranking.
//!
//! Gradients alone cannot locate the frequency — the likelihood surface is
//! riddled with local maxima in the high-frequency region — so the frequency
//! moves only through grid scans while (β, ℓ, σ²) move through CG.

use crate::fastpath::{self, LowRankConfig, SubsampleConfig};
use crate::gp::{self, ScoreWhich, Workspace};
use crate::kernel::{Hyperparams, PairwiseDeltas};
use crate::lightcurve::{CandidateList, LightCurve, MethodKind, PeriodEstimate};
use crate::priors::PeriodScorer;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Model-selection criterion driving the scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Log marginal likelihood, maximized.
    Ml,
    /// Leave-one-out squared error, minimized.
    Cv,
}

impl Criterion {
    /// Is score `a` strictly better than `b` under this criterion?
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Criterion::Ml => a > b,
            Criterion::Cv => a < b,
        }
    }

    /// Sentinel for rejected hyperparameter points.
    pub fn worst(self) -> f64 {
        match self {
            Criterion::Ml => f64::NEG_INFINITY,
            Criterion::Cv => f64::INFINITY,
        }
    }

    pub fn method_kind(self) -> MethodKind {
        match self {
            Criterion::Ml => MethodKind::Ml,
            Criterion::Cv => MethodKind::Cv,
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("series has {0} points, need at least 10 for period search")]
    TooFewPoints(usize),
    #[error("magnitudes are constant; no periodic signal to estimate")]
    ConstantSeries,
    #[error("observation span is zero")]
    ZeroSpan,
    #[error("invalid search config: {0}")]
    BadConfig(String),
    #[error("no grid frequency produced a finite score")]
    NoFiniteScores,
    #[error("frequency grid is empty or not strictly increasing")]
    BadGrid,
}

/// Strictly increasing positive trial frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    values: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, SearchError> {
        if values.is_empty() || values[0] <= 0.0 {
            return Err(SearchError::BadGrid);
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SearchError::BadGrid);
        }
        Ok(Self { values })
    }

    /// Arithmetic grid `lo, lo+step, …` up to and including `hi` (within
    /// rounding slack).
    pub fn from_range(lo: f64, hi: f64, step: f64) -> Result<Self, SearchError> {
        if !(lo > 0.0) || !(hi > lo) || !(step > 0.0) {
            return Err(SearchError::BadGrid);
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|k| lo + k as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Search configuration with the defaults used throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub criterion: Criterion,
    /// Coarse-stage cyclic iterations L₁.
    pub l1: usize,
    /// Fine-stage cyclic iterations L₂.
    pub l2: usize,
    /// Candidates retained from the coarse stage and reported at the end.
    pub top_k: usize,
    /// Coarse grid over-sampling factor (step = 1/(oversample·T)).
    pub oversample: usize,
    /// Explicit coarse grid (lo, hi, step); overrides the span-based rule.
    pub coarse_range: Option<(f64, f64, f64)>,
    /// Half-width of each fine neighborhood.
    pub fine_radius: f64,
    /// Fine grid step.
    pub fine_step: f64,
    /// Full-algorithm restarts with fresh random initialization.
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::Ml,
            l1: 2,
            l2: 2,
            top_k: 10,
            oversample: 8,
            coarse_range: None,
            fine_radius: 1e-3,
            fine_step: 1e-4,
            restarts: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.l1 < 1 || self.l2 < 1 || self.top_k < 1 || self.restarts < 1 {
            return Err(SearchError::BadConfig(
                "l1, l2, top_k, restarts must be ≥ 1".into(),
            ));
        }
        if self.oversample < 1 {
            return Err(SearchError::BadConfig("oversample must be ≥ 1".into()));
        }
        if !(self.fine_step > 0.0) || self.fine_step >= self.fine_radius {
            return Err(SearchError::BadConfig(
                "fine_step must be positive and smaller than fine_radius".into(),
            ));
        }
        Ok(())
    }
}

/// Criterion scores over a frequency grid. Rejected points carry the
/// criterion's sentinel so the table stays total.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub grid: FrequencyGrid,
    pub scores: Vec<f64>,
    pub criterion: Criterion,
}

impl ScoreTable {
    /// Index and score of the best finite entry; ties go to the lower
    /// frequency (the grid is ascending, strict improvement keeps the first).
    pub fn arg_best(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &s) in self.scores.iter().enumerate() {
            if !s.is_finite() {
                continue;
            }
            match best {
                None => best = Some((i, s)),
                Some((_, b)) if self.criterion.better(s, b) => best = Some((i, s)),
                _ => {}
            }
        }
        best
    }

    /// Best `k` (frequency, score) pairs, best first, ties by lower frequency.
    pub fn top_k(&self, k: usize) -> Vec<(f64, f64)> {
        let mut idx: Vec<usize> = (0..self.scores.len())
            .filter(|&i| self.scores[i].is_finite())
            .collect();
        idx.sort_by(|&a, &b| {
            let (sa, sb) = (self.scores[a], self.scores[b]);
            let ord = match self.criterion {
                Criterion::Ml => sb.total_cmp(&sa),
                Criterion::Cv => sa.total_cmp(&sb),
            };
            ord.then(a.cmp(&b))
        });
        idx.truncate(k);
        idx.into_iter()
            .map(|i| (self.grid.values()[i], self.scores[i]))
            .collect()
    }
}

/// Coarse grid per the span rule: `f_min = 1/T`, `f_max = N/T` (twice the
/// Nyquist frequency of N evenly spaced points), `step = 1/(oversample·T)` —
/// unless an explicit range overrides it.
pub fn build_coarse_grid(lc: &LightCurve, cfg: &SearchConfig) -> Result<FrequencyGrid, SearchError> {
    if let Some((lo, hi, step)) = cfg.coarse_range {
        return FrequencyGrid::from_range(lo, hi, step);
    }
    let span = lc.span();
    if !(span > 0.0) {
        return Err(SearchError::ZeroSpan);
    }
    let f_min = 1.0 / span;
    let f_max = lc.len() as f64 / span;
    let step = 1.0 / (cfg.oversample as f64 * span);
    FrequencyGrid::from_range(f_min, f_max, step)
}

/// Union of symmetric neighborhoods `[f−radius, f+radius]` stepped by `step`
/// around each given frequency; merged, sorted, clipped to positive values.
pub fn build_fine_grid(top_freqs: &[f64], radius: f64, step: f64) -> FrequencyGrid {
    assert!(!top_freqs.is_empty(), "need at least one center frequency");
    assert!(radius > 0.0 && step > 0.0);
    let per_side = (radius / step).round() as i64;
    let mut values = Vec::new();
    for &c in top_freqs {
        for k in -per_side..=per_side {
            let f = c + k as f64 * step;
            if f > 0.0 {
                values.push(f);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() < step * 0.5);
    FrequencyGrid::new(values).expect("fine grid construction yields a valid grid")
}

/// Shared per-series state for repeated scoring.
pub(crate) struct SeriesContext<'a> {
    pub(crate) lc: &'a LightCurve,
    pub(crate) deltas: PairwiseDeltas,
    /// Mean-subtracted magnitudes.
    pub(crate) y: Vec<f64>,
}

impl<'a> SeriesContext<'a> {
    pub(crate) fn new(lc: &'a LightCurve) -> Self {
        let mean = lc.mean_mag();
        Self {
            lc,
            deltas: PairwiseDeltas::new(lc.times()),
            y: lc.mags().iter().map(|v| v - mean).collect(),
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.lc.len()
    }

    /// Criterion score at a single hyperparameter point (sentinel on failure).
    pub(crate) fn score_at(&self, h: &Hyperparams, criterion: Criterion) -> f64 {
        let mut ws = Workspace::new(self.n());
        ws.score(&self.deltas, h, &self.y, gp::which_from(criterion))
    }
}

/// Score every grid frequency with (β, ℓ, σ²) held fixed.
///
/// Grid points are independent; evaluation is parallel but the table is
/// assembled in grid order, so results do not depend on scheduling.
pub fn grid_scan(
    lc: &LightCurve,
    grid: &FrequencyGrid,
    h: &Hyperparams,
    criterion: Criterion,
) -> ScoreTable {
    let ctx = SeriesContext::new(lc);
    scan_ctx(&ctx, grid, h, criterion)
}

pub(crate) fn scan_ctx(
    ctx: &SeriesContext<'_>,
    grid: &FrequencyGrid,
    h: &Hyperparams,
    criterion: Criterion,
) -> ScoreTable {
    let which = gp::which_from(criterion);
    let n = ctx.n();
    let scores: Vec<f64> = grid
        .values()
        .par_iter()
        .map_init(
            || Workspace::new(n),
            |ws, &f| ws.score(&ctx.deltas, &h.with_w(f), &ctx.y, which),
        )
        .collect();
    ScoreTable {
        grid: grid.clone(),
        scores,
        criterion,
    }
}

/// Outcome of one conjugate-gradient run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub hyper: Hyperparams,
    /// Log marginal likelihood at `hyper`.
    pub lml: f64,
    /// False when no line search made progress (hyper equals the input).
    pub improved: bool,
    pub evals: usize,
    /// ∞-norm of the raw-parameter gradient at the returned point.
    pub grad_inf_norm: f64,
}

/// Joint conjugate-gradient ascent of the log marginal likelihood over
/// log(β, w, ℓ, σ²), Polak–Ribière directions with a backtracking line
/// search. The caller typically keeps β, ℓ, σ² and discards the incidental
/// frequency w̃.
pub fn optimize_nuisance(lc: &LightCurve, h0: &Hyperparams, max_evals: usize) -> OptimResult {
    let ctx = SeriesContext::new(lc);
    optimize_nuisance_ctx(&ctx, h0, max_evals)
}

const Z_MIN: f64 = -23.0; // ln ~1e-10
const Z_MAX: f64 = 23.0; // ln ~1e10

fn z_of(h: &Hyperparams) -> [f64; 4] {
    [h.beta.ln(), h.w.ln(), h.ell.ln(), h.sigma2.ln()]
}

fn h_of(z: &[f64; 4]) -> Hyperparams {
    Hyperparams {
        beta: z[0].exp(),
        w: z[1].exp(),
        ell: z[2].exp(),
        sigma2: z[3].exp(),
    }
}

fn clamp_z(z: &mut [f64; 4]) {
    for v in z.iter_mut() {
        *v = v.clamp(Z_MIN, Z_MAX);
    }
}

pub(crate) fn optimize_nuisance_ctx(
    ctx: &SeriesContext<'_>,
    h0: &Hyperparams,
    max_evals: usize,
) -> OptimResult {
    let mut ws = Workspace::new(ctx.n());
    let mut evals = 0usize;

    let eval_f = |z: &[f64; 4], ws: &mut Workspace, evals: &mut usize| -> f64 {
        *evals += 1;
        ws.score(&ctx.deltas, &h_of(z), &ctx.y, ScoreWhich::Ml)
    };
    // Gradient in log space: d lml / d ln θ = θ · d lml / d θ.
    let eval_fg = |z: &[f64; 4],
                   ws: &mut Workspace,
                   evals: &mut usize|
     -> Option<(f64, [f64; 4], [f64; 4])> {
        *evals += 1;
        let h = h_of(z);
        match ws.lml_and_grad(&ctx.deltas, &h, &ctx.y) {
            Ok((f, g_raw)) => {
                let g_log = [
                    g_raw[0] * h.beta,
                    g_raw[1] * h.w,
                    g_raw[2] * h.ell,
                    g_raw[3] * h.sigma2,
                ];
                Some((f, g_log, g_raw))
            }
            Err(_) => None,
        }
    };

    let inf = |g: &[f64; 4]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut z = z_of(h0);
    let (mut f, mut g, mut g_raw) = match eval_fg(&z, &mut ws, &mut evals) {
        Some(v) => v,
        None => {
            return OptimResult {
                hyper: *h0,
                lml: f64::NEG_INFINITY,
                improved: false,
                evals,
                grad_inf_norm: f64::INFINITY,
            }
        }
    };
    let f0 = f;
    let mut best = (f, z);
    let mut best_graw = g_raw;
    let mut d = g;
    let mut step = 1.0 / inf(&g).max(1.0);

    while evals < max_evals {
        let tol = 1e-4 * (1.0 + f.abs());
        if inf(&g).max(inf(&g_raw)) <= tol {
            break;
        }
        let mut slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if slope <= 0.0 {
            // direction lost ascent; restart from steepest ascent
            d = g;
            slope = g.iter().map(|v| v * v).sum();
            if slope <= 0.0 {
                break;
            }
            step = 1.0 / inf(&g).max(1.0);
        }
        // Backtracking Armijo line search on the ascent problem.
        let mut t = step;
        let mut accepted = None;
        for _ in 0..14 {
            if evals >= max_evals {
                break;
            }
            let mut z_try = [
                z[0] + t * d[0],
                z[1] + t * d[1],
                z[2] + t * d[2],
                z[3] + t * d[3],
            ];
            clamp_z(&mut z_try);
            let f_try = eval_f(&z_try, &mut ws, &mut evals);
            if f_try.is_finite() && f_try >= f + 1e-4 * t * slope {
                accepted = Some((z_try, f_try, t));
                break;
            }
            t *= 0.5;
        }
        let Some((z_new, f_new_probe, t_used)) = accepted else {
            if d != g {
                d = g;
                step = 1.0 / inf(&g).max(1.0);
                continue;
            }
            break;
        };
        if f_new_probe > best.0 {
            best = (f_new_probe, z_new);
        }
        if evals >= max_evals {
            break;
        }
        let Some((f_new, g_new, g_raw_new)) = eval_fg(&z_new, &mut ws, &mut evals) else {
            break;
        };
        // Polak–Ribière+ on the ascent gradients.
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let num: f64 = g_new.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
        let beta_pr = (num / gg.max(1e-300)).max(0.0);
        for k in 0..4 {
            d[k] = g_new[k] + beta_pr * d[k];
        }
        z = z_new;
        f = f_new;
        g = g_new;
        g_raw = g_raw_new;
        if f >= best.0 {
            best = (f, z);
            best_graw = g_raw;
        }
        step = (t_used * 2.0).min(1.0);
    }

    let improved = best.0 > f0;
    OptimResult {
        hyper: if improved { h_of(&best.1) } else { *h0 },
        lml: if improved { best.0 } else { f0 },
        improved,
        evals,
        grad_inf_norm: inf(if improved { &best_graw } else { &g_raw }),
    }
}

/// Which implementation backs each scan stage.
#[derive(Debug, Clone, Default)]
pub struct ScanPlan {
    pub coarse: CoarseScan,
    pub fine: FineScan,
}

#[derive(Debug, Clone, Default)]
pub enum CoarseScan {
    #[default]
    Exact,
    /// Ensemble-subsampled coarse scan.
    Subsample(SubsampleConfig),
}

#[derive(Debug, Clone, Default)]
pub enum FineScan {
    #[default]
    Exact,
    /// ε-net fine scan with low-rank Cholesky shifts between anchors.
    EpsNet(LowRankConfig),
}

/// A finished search: ranked candidates, the hyperparameters in effect for
/// the final scan (with `w` set to the winning frequency), and the last
/// score table of each stage.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub candidates: CandidateList,
    pub hyper: Hyperparams,
    pub coarse: ScoreTable,
    pub fine: ScoreTable,
}

/// Optional MAP blending of the scan scores with a domain prior.
pub(crate) struct PriorBlend<'a> {
    pub scorer: &'a dyn PeriodScorer,
    pub gamma: f64,
}

fn max_evals_per_cg() -> usize {
    100
}

fn random_init(rng: &mut ChaCha8Rng, lc: &LightCurve, coarse: &FrequencyGrid) -> Hyperparams {
    let lo = coarse.values()[0];
    let hi = *coarse.values().last().expect("non-empty grid");
    let beta = rng.random_range((0.1f64).ln()..(3.0f64).ln()).exp();
    let ell = rng.random_range((0.1f64).ln()..(3.0f64).ln()).exp();
    Hyperparams {
        beta,
        w: (lo * hi).sqrt(),
        ell,
        sigma2: 0.25 * lc.var_mag(),
    }
}

fn blend_table(
    ctx: &SeriesContext<'_>,
    table: ScoreTable,
    prior: Option<&PriorBlend<'_>>,
) -> ScoreTable {
    let Some(pb) = prior else { return table };
    debug_assert_eq!(table.criterion, Criterion::Ml, "MAP blends the ML score");
    let prior_scores: Vec<f64> = table
        .grid
        .values()
        .par_iter()
        .map(|&f| pb.scorer.score(ctx.lc, 1.0 / f))
        .collect();
    let scores = table
        .scores
        .iter()
        .zip(&prior_scores)
        .map(|(&ml, &pr)| {
            if ml.is_finite() {
                pb.gamma * ml + (1.0 - pb.gamma) * pr
            } else {
                ml
            }
        })
        .collect();
    ScoreTable {
        grid: table.grid,
        scores,
        criterion: table.criterion,
    }
}

fn pipeline_point_score(
    ctx: &SeriesContext<'_>,
    h: &Hyperparams,
    criterion: Criterion,
    prior: Option<&PriorBlend<'_>>,
) -> f64 {
    let base = ctx.score_at(h, criterion);
    match prior {
        Some(pb) if base.is_finite() => pb.gamma * base + (1.0 - pb.gamma) * pb.scorer.score(ctx.lc, h.period()),
        _ => base,
    }
}

/// CG step followed by a monotonicity guard: the new nuisance parameters are
/// kept only if they do not worsen the pipeline criterion at the current
/// frequency. This keeps two-level refinement from regressing below the
/// retained coarse score.
fn cg_then_guard(
    ctx: &SeriesContext<'_>,
    h: &Hyperparams,
    criterion: Criterion,
    prior: Option<&PriorBlend<'_>>,
) -> Hyperparams {
    let opt = optimize_nuisance_ctx(ctx, h, max_evals_per_cg());
    if !opt.improved {
        return *h;
    }
    let cand = opt.hyper.with_w(h.w);
    let s_new = pipeline_point_score(ctx, &cand, criterion, prior);
    let s_old = pipeline_point_score(ctx, h, criterion, prior);
    if s_new.is_finite() && (!s_old.is_finite() || !criterion.better(s_old, s_new)) {
        cand
    } else {
        *h
    }
}

fn coarse_table(
    ctx: &SeriesContext<'_>,
    grid: &FrequencyGrid,
    h: &Hyperparams,
    criterion: Criterion,
    plan: &ScanPlan,
) -> ScoreTable {
    match &plan.coarse {
        CoarseScan::Exact => scan_ctx(ctx, grid, h, criterion),
        CoarseScan::Subsample(cfg) => {
            fastpath::subsample_ensemble_score(ctx.lc, grid, h, cfg, criterion)
        }
    }
}

fn fine_table(
    ctx: &SeriesContext<'_>,
    grid: &FrequencyGrid,
    h: &Hyperparams,
    criterion: Criterion,
    plan: &ScanPlan,
) -> ScoreTable {
    match &plan.fine {
        FineScan::Exact => scan_ctx(ctx, grid, h, criterion),
        FineScan::EpsNet(cfg) => fastpath::epsnet_fine_scan(ctx.lc, grid, h, cfg, criterion),
    }
}

/// Fine-window geometry for a given coarse grid: the configured radius, or
/// enough to tile the coarse quantization gap when the coarse step is wider
/// (the step scales with the radius so each window keeps its point count).
pub fn effective_fine_window(cfg: &SearchConfig, coarse: &FrequencyGrid) -> (f64, f64) {
    let coarse_step = if coarse.len() >= 2 {
        coarse.values()[1] - coarse.values()[0]
    } else {
        0.0
    };
    let radius = cfg.fine_radius.max(0.5 * coarse_step);
    let step = cfg.fine_step * (radius / cfg.fine_radius);
    (radius, step)
}

fn single_run(
    ctx: &SeriesContext<'_>,
    cfg: &SearchConfig,
    plan: &ScanPlan,
    prior: Option<&PriorBlend<'_>>,
    coarse: &FrequencyGrid,
    seed: u64,
) -> Result<SearchOutcome, SearchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = random_init(&mut rng, ctx.lc, coarse);
    let criterion = cfg.criterion;

    let mut table = None;
    for _ in 0..cfg.l1 {
        h = cg_then_guard(ctx, &h, criterion, prior);
        let t = blend_table(ctx, coarse_table(ctx, coarse, &h, criterion, plan), prior);
        let (i, _) = t.arg_best().ok_or(SearchError::NoFiniteScores)?;
        h = h.with_w(t.grid.values()[i]);
        table = Some(t);
    }
    let table = table.expect("l1 >= 1");
    let top: Vec<f64> = table
        .top_k(cfg.top_k)
        .into_iter()
        .map(|(f, _)| f)
        .collect();
    if top.is_empty() {
        return Err(SearchError::NoFiniteScores);
    }

    let (radius, step) = effective_fine_window(cfg, coarse);
    let fine = build_fine_grid(&top, radius, step);
    let mut ftable = None;
    for _ in 0..cfg.l2 {
        h = cg_then_guard(ctx, &h, criterion, prior);
        let t = blend_table(ctx, fine_table(ctx, &fine, &h, criterion, plan), prior);
        let (i, _) = t.arg_best().ok_or(SearchError::NoFiniteScores)?;
        h = h.with_w(t.grid.values()[i]);
        ftable = Some(t);
    }
    let ftable = ftable.expect("l2 >= 1");

    let kind = if prior.is_some() {
        MethodKind::Map
    } else {
        criterion.method_kind()
    };
    let items: Vec<PeriodEstimate> = ftable
        .top_k(cfg.top_k)
        .into_iter()
        .enumerate()
        .map(|(i, (f, s))| PeriodEstimate::from_frequency(f, s, kind, i + 1))
        .collect();
    if items.is_empty() {
        return Err(SearchError::NoFiniteScores);
    }
    Ok(SearchOutcome {
        candidates: CandidateList {
            items,
            degenerate: false,
        },
        hyper: h,
        coarse: table,
        fine: ftable,
    })
}

pub(crate) fn run_pipeline(
    lc: &LightCurve,
    cfg: &SearchConfig,
    plan: &ScanPlan,
    prior: Option<&PriorBlend<'_>>,
    seed: u64,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    if lc.len() < 10 {
        return Err(SearchError::TooFewPoints(lc.len()));
    }
    if !(lc.var_mag() > 0.0) {
        return Err(SearchError::ConstantSeries);
    }
    let coarse = build_coarse_grid(lc, cfg)?;
    let ctx = SeriesContext::new(lc);

    let mut best: Option<SearchOutcome> = None;
    for r in 0..cfg.restarts {
        let outcome = single_run(&ctx, cfg, plan, prior, &coarse, crate::derive_seed(seed, r as u64))?;
        best = match best {
            None => Some(outcome),
            Some(cur) => {
                let (a, b) = (outcome.candidates.items[0].score, cur.candidates.items[0].score);
                if cfg.criterion.better(a, b) {
                    Some(outcome)
                } else {
                    Some(cur)
                }
            }
        };
    }
    Ok(best.expect("restarts >= 1"))
}

/// Run the full two-level search and return ranked candidates.
///
/// Deterministic: the same (series, config, seed) produces the same list.
pub fn estimate_period(
    lc: &LightCurve,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<CandidateList, SearchError> {
    Ok(run_pipeline(lc, cfg, &ScanPlan::default(), None, seed)?.candidates)
}

/// As `estimate_period`, with explicit scan implementations per stage, and
/// returning the final hyperparameters alongside the candidates.
pub fn estimate_period_with(
    lc: &LightCurve,
    cfg: &SearchConfig,
    plan: &ScanPlan,
    seed: u64,
) -> Result<SearchOutcome, SearchError> {
    run_pipeline(lc, cfg, plan, None, seed)
}
