//! Irregularly sampled time series: loading, folding, and the hit metric
//! used for evaluating period estimates.

use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which scoring path produced a period estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Ml,
    Cv,
    Map,
    Ls,
    Pdm,
    Filter,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MethodKind::Ml => "ml",
            MethodKind::Cv => "cv",
            MethodKind::Map => "map",
            MethodKind::Ls => "ls",
            MethodKind::Pdm => "pdm",
            MethodKind::Filter => "filter",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum LightCurveError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("fewer than 2 valid rows ({0} found)")]
    TooFewRows(usize),
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(f64),
    #[error("times and mags lengths differ ({times} vs {mags})")]
    LengthMismatch { times: usize, mags: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Text layout of a lightcurve stream: whitespace- or comma-separated columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Whitespace,
    Csv,
}

/// One source's measurements at strictly increasing times.
///
/// Per-point errors are carried through from the input for provenance but the
/// GP model assumes homogeneous noise and never reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct LightCurve {
    id: String,
    times: Vec<f64>,
    mags: Vec<f64>,
    errs: Option<Vec<f64>>,
}

impl LightCurve {
    pub fn new(
        id: impl Into<String>,
        times: Vec<f64>,
        mags: Vec<f64>,
        errs: Option<Vec<f64>>,
    ) -> Result<Self, LightCurveError> {
        if times.len() != mags.len() {
            return Err(LightCurveError::LengthMismatch {
                times: times.len(),
                mags: mags.len(),
            });
        }
        if let Some(e) = &errs {
            if e.len() != times.len() {
                return Err(LightCurveError::LengthMismatch {
                    times: times.len(),
                    mags: e.len(),
                });
            }
        }
        if times.len() < 2 {
            return Err(LightCurveError::TooFewRows(times.len()));
        }
        if times.iter().any(|v| !v.is_finite())
            || mags.iter().any(|v| !v.is_finite())
            || errs
                .as_ref()
                .is_some_and(|e| e.iter().any(|v| !v.is_finite()))
        {
            return Err(LightCurveError::NonFinite);
        }

        // Sort by time, carrying mags (and errs) along.
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let sorted_times: Vec<f64> = order.iter().map(|&i| times[i]).collect();
        for pair in sorted_times.windows(2) {
            if pair[0] == pair[1] {
                return Err(LightCurveError::DuplicateTimestamp(pair[0]));
            }
        }
        let sorted_mags: Vec<f64> = order.iter().map(|&i| mags[i]).collect();
        let sorted_errs = errs.map(|e| order.iter().map(|&i| e[i]).collect());

        Ok(Self {
            id: id.into(),
            times: sorted_times,
            mags: sorted_mags,
            errs: sorted_errs,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mags(&self) -> &[f64] {
        &self.mags
    }

    pub fn errs(&self) -> Option<&[f64]> {
        self.errs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Observation span `t_max - t_min`.
    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn mean_mag(&self) -> f64 {
        self.mags.iter().sum::<f64>() / self.mags.len() as f64
    }

    /// Population variance of the magnitudes.
    pub fn var_mag(&self) -> f64 {
        let m = self.mean_mag();
        self.mags.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / self.mags.len() as f64
    }

    /// Restrict to a subset of sample indices (deduplicated, time order kept).
    pub fn subset(&self, indices: &[usize]) -> Result<Self, LightCurveError> {
        let mut idx: Vec<usize> = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let times: Vec<f64> = idx.iter().map(|&i| self.times[i]).collect();
        let mags: Vec<f64> = idx.iter().map(|&i| self.mags[i]).collect();
        let errs = self
            .errs
            .as_ref()
            .map(|e| idx.iter().map(|&i| e[i]).collect());
        Self::new(self.id.clone(), times, mags, errs)
    }

    /// Write in the plain-text format (`time mag [err]`, one row per sample).
    pub fn to_writer(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        for i in 0..self.len() {
            match &self.errs {
                Some(e) => writeln!(w, "{} {} {}", self.times[i], self.mags[i], e[i])?,
                None => writeln!(w, "{} {}", self.times[i], self.mags[i])?,
            }
        }
        Ok(())
    }
}

/// Parse a lightcurve from a text stream.
///
/// Each data line holds 2 or 3 numeric columns (`time magnitude [error]`);
/// `#` starts a comment. Rows arrive in any order and are sorted by time.
pub fn load_lightcurve(
    source: impl BufRead,
    format: Format,
    id: impl Into<String>,
) -> Result<LightCurve, LightCurveError> {
    let mut times = Vec::new();
    let mut mags = Vec::new();
    let mut errs: Vec<f64> = Vec::new();
    let mut saw_err_col = false;

    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = match format {
            Format::Whitespace => trimmed.split_whitespace().collect(),
            Format::Csv => trimmed.split(',').map(str::trim).collect(),
        };
        if fields.len() < 2 || fields.len() > 3 {
            return Err(LightCurveError::MalformedLine {
                line: lineno,
                reason: format!("expected 2 or 3 columns, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 3];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.parse::<f64>().map_err(|e| LightCurveError::MalformedLine {
                line: lineno,
                reason: format!("column {}: {e}", k + 1),
            })?;
        }
        if !vals[..fields.len()].iter().all(|v| v.is_finite()) {
            // Non-finite rows are rejected, not silently dropped mid-file.
            return Err(LightCurveError::MalformedLine {
                line: lineno,
                reason: "non-finite value".into(),
            });
        }
        times.push(vals[0]);
        mags.push(vals[1]);
        if fields.len() == 3 {
            saw_err_col = true;
            errs.push(vals[2]);
        } else {
            errs.push(f64::NAN);
        }
    }

    let errs = if saw_err_col && errs.iter().all(|v| v.is_finite()) {
        Some(errs)
    } else {
        None
    };
    LightCurve::new(id, times, mags, errs)
}

/// A lightcurve folded at a trial period: phases in `[0, 1)`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedCurve {
    pub phases: Vec<f64>,
    pub mags: Vec<f64>,
    pub period: f64,
}

#[derive(Debug, Error)]
#[error("non-positive period {0}")]
pub struct NonPositivePeriod(pub f64);

/// Fold at `period`, phase origin at the first timestamp.
pub fn fold(lc: &LightCurve, period: f64) -> Result<PhasedCurve, NonPositivePeriod> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(NonPositivePeriod(period));
    }
    let t0 = lc.times()[0];
    let mut pairs: Vec<(f64, f64)> = lc
        .times()
        .iter()
        .zip(lc.mags())
        .map(|(&t, &y)| {
            let mut ph = ((t - t0) / period).fract();
            if ph < 0.0 {
                ph += 1.0;
            }
            // fract of an exact multiple can land on 1.0 after the wrap
            if ph >= 1.0 {
                ph = 0.0;
            }
            (ph, y)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PhasedCurve {
        phases: pairs.iter().map(|p| p.0).collect(),
        mags: pairs.iter().map(|p| p.1).collect(),
        period,
    })
}

/// True when the estimate is within `tol` relative error of the truth.
pub fn accuracy_hit(p_hat: f64, p_true: f64, tol: f64) -> bool {
    debug_assert!(p_true > 0.0);
    (p_hat - p_true).abs() / p_true <= tol
}

/// One ranked period candidate with its score and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub frequency: f64,
    pub period: f64,
    pub score: f64,
    pub criterion: MethodKind,
    pub rank: usize,
}

impl PeriodEstimate {
    pub fn from_frequency(frequency: f64, score: f64, criterion: MethodKind, rank: usize) -> Self {
        Self {
            frequency,
            period: 1.0 / frequency,
            score,
            criterion,
            rank,
        }
    }
}

/// Ranked candidates from one scoring method.
///
/// `degenerate` marks series where the criterion expressed no finite
/// preference (e.g. constant magnitudes under LS/PDM).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub items: Vec<PeriodEstimate>,
    pub degenerate: bool,
}

impl CandidateList {
    pub fn best(&self) -> Option<&PeriodEstimate> {
        self.items.first()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn load_str(s: &str) -> Result<LightCurve, LightCurveError> {
        load_lightcurve(Cursor::new(s), Format::Whitespace, "test")
    }

    #[test]
    fn parses_plain_rows() {
        let lc = load_str("0 1.0\n1 2.0\n2 1.0").unwrap();
        assert_eq!(lc.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(lc.mags(), &[1.0, 2.0, 1.0]);
        assert!(lc.errs().is_none());
    }

    #[test]
    fn sorts_by_time() {
        let lc = load_str("1 2.0\n0 1.0").unwrap();
        assert_eq!(lc.times(), &[0.0, 1.0]);
        assert_eq!(lc.mags(), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_duplicate_timestamps() {
        let err = load_str("0 1.0\n0 2.0").unwrap_err();
        assert!(matches!(err, LightCurveError::DuplicateTimestamp(_)));
    }

    #[test]
    fn rejects_malformed_line_with_number() {
        let err = load_str("0 1.0\nxyz 2.0").unwrap_err();
        match err {
            LightCurveError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_too_few_rows() {
        assert!(matches!(
            load_str("1 2.0"),
            Err(LightCurveError::TooFewRows(1))
        ));
        assert!(matches!(
            load_str("# only comments\n"),
            Err(LightCurveError::TooFewRows(0))
        ));
    }

    #[test]
    fn rejects_non_finite_rows() {
        let err = load_str("0 1.0\n1 nan").unwrap_err();
        assert!(matches!(err, LightCurveError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn csv_with_error_column() {
        let lc = load_lightcurve(
            Cursor::new("0,1.0,0.1\n1,2.0,0.2 # trailing comment"),
            Format::Csv,
            "c",
        )
        .unwrap();
        assert_eq!(lc.errs().unwrap(), &[0.1, 0.2]);
    }

    #[test]
    fn fold_basic() {
        let lc = LightCurve::new("f", vec![0.0, 7.3], vec![1.0, 2.0], None).unwrap();
        let pc = fold(&lc, 2.0).unwrap();
        assert!((pc.phases[0] - 0.0).abs() < 1e-12);
        assert!((pc.phases[1] - 0.65).abs() < 1e-12);
    }

    #[test]
    fn fold_integer_multiples_collapse() {
        let lc = LightCurve::new("f", vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], None).unwrap();
        let pc = fold(&lc, 1.0).unwrap();
        assert!(pc.phases.iter().all(|&p| p.abs() < 1e-12));
    }

    #[test]
    fn fold_sorts_by_phase() {
        let lc = LightCurve::new("f", vec![0.0, 0.5, 1.25], vec![1.0, 2.0, 3.0], None).unwrap();
        let pc = fold(&lc, 1.0).unwrap();
        let expect = [0.0, 0.25, 0.5];
        for (p, e) in pc.phases.iter().zip(expect) {
            assert!((p - e).abs() < 1e-12);
        }
        assert_eq!(pc.mags, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn fold_rejects_bad_period() {
        let lc = LightCurve::new("f", vec![0.0, 1.0], vec![1.0, 2.0], None).unwrap();
        assert!(fold(&lc, 0.0).is_err());
        assert!(fold(&lc, -2.0).is_err());
    }

    #[test]
    fn fold_phase_differences_shift_invariant() {
        let times = vec![0.3, 1.7, 2.9, 4.1, 6.2];
        let mags = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let lc1 = LightCurve::new("a", times.clone(), mags.clone(), None).unwrap();
        let shifted: Vec<f64> = times.iter().map(|t| t + 123.456).collect();
        let lc2 = LightCurve::new("b", shifted, mags, None).unwrap();
        let p1 = fold(&lc1, 1.3).unwrap();
        let p2 = fold(&lc2, 1.3).unwrap();
        for i in 1..p1.phases.len() {
            let d1 = p1.phases[i] - p1.phases[0];
            let d2 = p2.phases[i] - p2.phases[0];
            assert!((d1 - d2).abs() < 1e-9, "phase differences moved under shift");
        }
    }

    #[test]
    fn fold_true_period_is_single_valued() {
        // Noiseless periodic signal folded at its own period overlays itself.
        let period = 1.7;
        let times: Vec<f64> = (0..60).map(|i| 0.37 * i as f64).collect();
        let mags: Vec<f64> = times
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * t / period).sin())
            .collect();
        let lc = LightCurve::new("s", times, mags, None).unwrap();
        let pc = fold(&lc, period).unwrap();
        for i in 0..pc.phases.len() {
            for j in (i + 1)..pc.phases.len() {
                if (pc.phases[i] - pc.phases[j]).abs() < 1e-9 {
                    assert!((pc.mags[i] - pc.mags[j]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn accuracy_hit_examples() {
        assert!(accuracy_hit(2.019, 2.0, 0.01));
        assert!(!accuracy_hit(1.0, 2.0, 0.01));
        assert!(accuracy_hit(2.0, 2.0, 0.01));
    }

    #[test]
    fn load_serialize_round_trip() {
        let input = "0.5 1.25 0.1\n1.75 -2.5 0.2\n3.125 0.0 0.3\n";
        let lc = load_str(input).unwrap();
        let mut buf = Vec::new();
        lc.to_writer(&mut buf).unwrap();
        let lc2 = load_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(lc, lc2);
    }

    #[test]
    fn subset_keeps_time_order() {
        let lc = LightCurve::new(
            "s",
            vec![0.0, 1.0, 2.0, 3.0],
            vec![10.0, 11.0, 12.0, 13.0],
            None,
        )
        .unwrap();
        let sub = lc.subset(&[3, 0, 2]).unwrap();
        assert_eq!(sub.times(), &[0.0, 2.0, 3.0]);
        assert_eq!(sub.mags(), &[10.0, 12.0, 13.0]);
    }
}
