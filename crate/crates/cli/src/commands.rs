//! Subcommand implementations and their JSON/CSV outputs.

use crate::config::{CriterionOpt, FilterMode, Method, RunConfig};
use anyhow::{anyhow, bail, Context, Result};
use gpperiod_core::{
    accuracy_hit, baseline_estimate, build_coarse_grid, combine_methods, double_period_filter,
    estimate_period_map, estimate_period_with, filter_select, fold, load_lightcurve, run_benchmark,
    synth, BaselineMethod, BenchMethod, CandidateList, CoarseScan, Criterion, FineScan, Format,
    FrequencyGrid, Hyperparams, LightCurve, PeriodEstimate, ReferenceScorer, ScanPlan, ScoreTable,
    SubsampleConfig, SynthKind, SynthSpec,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub id: String,
    pub method: String,
    pub criterion: String,
    pub filter: String,
    pub seed: u64,
    pub degenerate: bool,
    pub candidates: Vec<PeriodEstimate>,
    pub chosen: PeriodEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyper: Option<Hyperparams>,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct BatchLine {
    pub schema_version: u32,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen: Option<PeriodEstimate>,
    pub candidates: Vec<PeriodEstimate>,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct BatchSummary {
    pub schema_version: u32,
    pub summary: bool,
    pub total: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_rate: Option<f64>,
    pub timing: Timing,
}

/// Everything a single-series run produces.
pub struct SingleOutcome {
    pub candidates: CandidateList,
    pub chosen: PeriodEstimate,
    pub hyper: Option<Hyperparams>,
    /// (stage label, table) pairs for the score CSV.
    pub tables: Vec<(String, ScoreTable)>,
}

fn scan_plan(cfg: &RunConfig) -> ScanPlan {
    ScanPlan {
        coarse: if cfg.run.subsample {
            CoarseScan::Subsample(SubsampleConfig {
                seed: gpperiod_core::derive_seed(cfg.run.seed, 0xE45),
                ..cfg.subsample
            })
        } else {
            CoarseScan::Exact
        },
        fine: if cfg.run.lowrank {
            FineScan::EpsNet(cfg.lowrank)
        } else {
            FineScan::Exact
        },
    }
}

fn scorer_of(cfg: &RunConfig) -> ReferenceScorer {
    ReferenceScorer {
        n_harmonics: cfg.prior.n_harmonics,
        ridge: cfg.prior.ridge,
    }
}

fn gp_candidates(
    lc: &LightCurve,
    cfg: &RunConfig,
) -> Result<(CandidateList, Hyperparams, Vec<(String, ScoreTable)>)> {
    let search_cfg = gpperiod_core::SearchConfig {
        criterion: cfg.criterion(),
        ..cfg.search.clone()
    };
    let plan = scan_plan(cfg);
    let outcome = match cfg.run.criterion {
        CriterionOpt::Map => {
            let scorer = scorer_of(cfg);
            estimate_period_map(lc, &search_cfg, &plan, &scorer, cfg.prior.gamma, cfg.run.seed)?
        }
        _ => estimate_period_with(lc, &search_cfg, &plan, cfg.run.seed)?,
    };
    let tables = vec![
        ("coarse".to_string(), outcome.coarse),
        ("fine".to_string(), outcome.fine),
    ];
    Ok((outcome.candidates, outcome.hyper, tables))
}

fn baseline_candidates(
    lc: &LightCurve,
    method: BaselineMethod,
    cfg: &RunConfig,
) -> Result<(CandidateList, Vec<(String, ScoreTable)>)> {
    let grid = match method {
        BaselineMethod::Ls => build_coarse_grid(lc, &cfg.search)?,
        // classical wide-range default for phase dispersion
        BaselineMethod::Pdm => FrequencyGrid::from_range(0.02, 5.0, 0.001)?,
    };
    let cand = baseline_estimate(lc, method, &grid, cfg.search.top_k);
    if cand.items.is_empty() {
        bail!("no finite scores over the frequency grid");
    }
    let pg = match method {
        BaselineMethod::Ls => gpperiod_core::lomb_scargle(lc, &grid),
        BaselineMethod::Pdm => gpperiod_core::pdm(lc, &grid, 15),
    };
    let table = ScoreTable {
        grid: pg.grid,
        scores: pg.power,
        criterion: Criterion::Ml,
    };
    Ok((cand, vec![("scan".to_string(), table)]))
}

fn apply_filter(
    lc: &LightCurve,
    cand: &CandidateList,
    mode: FilterMode,
    cfg: &RunConfig,
) -> PeriodEstimate {
    let scorer = scorer_of(cfg);
    match mode {
        FilterMode::None => cand.items[0].clone(),
        FilterMode::Filter => filter_select(lc, cand, &scorer),
        FilterMode::Double => double_period_filter(lc, cand, &scorer),
        FilterMode::Combine => unreachable!("combine is handled by the gp+ls path"),
    }
}

/// Estimate one series with the configured method, filter included.
pub fn run_single(lc: &LightCurve, cfg: &RunConfig) -> Result<SingleOutcome> {
    match cfg.run.method {
        Method::Gp => {
            let (cand, hyper, tables) = gp_candidates(lc, cfg)?;
            let chosen = apply_filter(lc, &cand, cfg.filter_mode(), cfg);
            Ok(SingleOutcome {
                chosen,
                hyper: Some(hyper),
                candidates: cand,
                tables,
            })
        }
        Method::Ls | Method::Pdm => {
            let method = match cfg.run.method {
                Method::Ls => BaselineMethod::Ls,
                _ => BaselineMethod::Pdm,
            };
            let (cand, tables) = baseline_candidates(lc, method, cfg)?;
            let chosen = apply_filter(lc, &cand, cfg.filter_mode(), cfg);
            Ok(SingleOutcome {
                chosen,
                hyper: None,
                candidates: cand,
                tables,
            })
        }
        Method::GpLs => {
            let (gp_cand, hyper, mut tables) = gp_candidates(lc, cfg)?;
            let (ls_cand, ls_tables) = baseline_candidates(lc, BaselineMethod::Ls, cfg)?;
            tables.extend(ls_tables);
            let scorer = scorer_of(cfg);
            let chosen = combine_methods(lc, &gp_cand, &ls_cand, &scorer);
            let mut items = gp_cand.items.clone();
            items.extend(ls_cand.items.iter().cloned());
            Ok(SingleOutcome {
                chosen,
                hyper: Some(hyper),
                candidates: CandidateList {
                    items,
                    degenerate: gp_cand.degenerate && ls_cand.degenerate,
                },
                tables,
            })
        }
    }
}

/// Sniff comma- vs whitespace-separated layout from the first data line.
pub fn load_curve_from_path(path: &Path) -> Result<LightCurve> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read lightcurve file {}", path.display()))?;
    let format = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .map_or(Format::Whitespace, |l| {
            if l.contains(',') {
                Format::Csv
            } else {
                Format::Whitespace
            }
        });
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    load_lightcurve(std::io::Cursor::new(text), format, id)
        .with_context(|| format!("cannot parse lightcurve file {}", path.display()))
}

fn write_artifacts(out: &Path, lc: &LightCurve, single: &SingleOutcome, report_json: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("fit.json"), format!("{report_json}\n"))?;
    // folded curve at the chosen period
    let pc = fold(lc, single.chosen.period).map_err(|e| anyhow!("{e}"))?;
    let mut folded = String::from("phase,mag\n");
    for (p, m) in pc.phases.iter().zip(&pc.mags) {
        folded.push_str(&format!("{p},{m}\n"));
    }
    fs::write(out.join("folded.csv"), folded)?;
    // score tables for plotting
    let mut scores = String::from("stage,frequency,score\n");
    for (stage, table) in &single.tables {
        for (f, s) in table.grid.values().iter().zip(&table.scores) {
            scores.push_str(&format!("{stage},{f},{s}\n"));
        }
    }
    fs::write(out.join("scores.csv"), scores)?;
    Ok(())
}

pub fn cmd_fit(input: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let lc = load_curve_from_path(input)?;
    let t0 = std::time::Instant::now();
    let single = run_single(&lc, cfg)?;
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        id: lc.id().to_string(),
        method: cfg.run.method.to_string(),
        criterion: cfg.run.criterion.to_string(),
        filter: cfg.filter_mode().to_string(),
        seed: cfg.run.seed,
        degenerate: single.candidates.degenerate,
        candidates: single.candidates.items.clone(),
        chosen: single.chosen.clone(),
        hyper: single.hyper,
        timing: Timing {
            seconds: t0.elapsed().as_secs_f64(),
        },
    };
    let json = serde_json::to_string(&report)?;
    println!("{json}");
    if let Some(dir) = out {
        write_artifacts(dir, &lc, &single, &json)?;
    }
    Ok(())
}

struct ManifestEntry {
    path: PathBuf,
    true_period: Option<f64>,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let file = fields.next().expect("non-empty line has a first field");
        let true_period = match fields.next() {
            Some(p) => Some(p.parse::<f64>().with_context(|| {
                format!("manifest line {}: bad true period '{p}'", lineno + 1)
            })?),
            None => None,
        };
        let p = PathBuf::from(file);
        entries.push(ManifestEntry {
            path: if p.is_absolute() { p } else { base.join(p) },
            true_period,
        });
    }
    Ok(entries)
}

pub fn cmd_batch(manifest: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        bail!("manifest {} lists no series", manifest.display());
    }
    let t0 = std::time::Instant::now();
    let lines: Vec<BatchLine> = entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let ts = std::time::Instant::now();
            let per_series = RunConfig {
                run: crate::config::RunSection {
                    seed: gpperiod_core::derive_seed(cfg.run.seed, i as u64),
                    ..cfg.run
                },
                ..cfg.clone()
            };
            let result = load_curve_from_path(&entry.path)
                .and_then(|lc| run_single(&lc, &per_series));
            match result {
                Ok(single) => {
                    let hit = entry
                        .true_period
                        .map(|p| accuracy_hit(single.chosen.period, p, 0.01));
                    BatchLine {
                        schema_version: SCHEMA_VERSION,
                        path: entry.path.display().to_string(),
                        true_period: entry.true_period,
                        hit,
                        error: None,
                        chosen: Some(single.chosen),
                        candidates: single.candidates.items,
                        timing: Timing {
                            seconds: ts.elapsed().as_secs_f64(),
                        },
                    }
                }
                Err(e) => BatchLine {
                    schema_version: SCHEMA_VERSION,
                    path: entry.path.display().to_string(),
                    true_period: entry.true_period,
                    hit: None,
                    error: Some(format!("{e:#}")),
                    chosen: None,
                    candidates: Vec::new(),
                    timing: Timing {
                        seconds: ts.elapsed().as_secs_f64(),
                    },
                },
            }
        })
        .collect();

    let failed = lines.iter().filter(|l| l.error.is_some()).count();
    let scored: Vec<&BatchLine> = lines.iter().filter(|l| l.hit.is_some()).collect();
    let hit_rate = if scored.is_empty() {
        None
    } else {
        Some(scored.iter().filter(|l| l.hit == Some(true)).count() as f64 / scored.len() as f64)
    };
    let summary = BatchSummary {
        schema_version: SCHEMA_VERSION,
        summary: true,
        total: lines.len(),
        failed,
        hit_rate,
        timing: Timing {
            seconds: t0.elapsed().as_secs_f64(),
        },
    };

    let mut all = String::new();
    for l in &lines {
        all.push_str(&serde_json::to_string(l)?);
        all.push('\n');
    }
    all.push_str(&serde_json::to_string(&summary)?);
    all.push('\n');
    print!("{all}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("batch.jsonl"), &all)?;
    }
    if failed == lines.len() {
        bail!("all {} series failed", lines.len());
    }
    Ok(())
}

pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<()> {
    if spec.n_series == 0 || spec.n_samples < 2 {
        bail!("need n_series ≥ 1 and n_samples ≥ 2");
    }
    if !(spec.time_range.0 < spec.time_range.1) || !(spec.noise_var > 0.0) {
        bail!("need time_lo < time_hi and noise_var > 0");
    }
    let corpus = synth::generate(spec);
    fs::create_dir_all(out)?;
    let mut manifest = String::new();
    for (i, s) in corpus.iter().enumerate() {
        let name = format!("series_{i:04}.txt");
        let mut buf = Vec::new();
        s.lc.to_writer(&mut buf)?;
        fs::write(out.join(&name), buf)?;
        manifest.push_str(&format!("{name} {}\n", s.true_period));
    }
    fs::write(out.join("manifest.txt"), manifest)?;
    fs::write(out.join("spec.json"), serde_json::to_string_pretty(spec)?)?;
    eprintln!(
        "wrote {} series and manifest.txt to {}",
        corpus.len(),
        out.display()
    );
    Ok(())
}

pub struct EvalArgs {
    pub spec: SynthSpec,
    pub methods: Vec<BenchMethod>,
    pub sizes: Vec<usize>,
    pub reps: usize,
}

pub fn parse_method_list(s: &str, criterion: Criterion, iterations: usize) -> Result<Vec<BenchMethod>> {
    s.split(',')
        .map(|m| match m.trim() {
            "gp" => Ok(BenchMethod::Gp {
                criterion,
                iterations,
                subsample: false,
                lowrank: false,
            }),
            "sgp" => Ok(BenchMethod::Gp {
                criterion,
                iterations,
                subsample: true,
                lowrank: false,
            }),
            "sgp+lowr" => Ok(BenchMethod::Gp {
                criterion,
                iterations,
                subsample: true,
                lowrank: true,
            }),
            "ls" => Ok(BenchMethod::Ls),
            "pdm" => Ok(BenchMethod::Pdm),
            other => bail!("unknown method '{other}' (expected gp, sgp, sgp+lowr, ls, pdm)"),
        })
        .collect()
}

pub fn cmd_eval(args: &EvalArgs, out: Option<&Path>) -> Result<()> {
    if args.sizes.is_empty() || args.methods.is_empty() || args.reps == 0 {
        bail!("need at least one method, one size, and one repetition");
    }
    if args.sizes.iter().any(|&s| s < 10 || s > args.spec.n_samples) {
        bail!("sizes must lie in [10, n_samples]");
    }
    let report = run_benchmark(&args.spec, &args.methods, &args.sizes, args.reps);
    let csv = report.to_csv();
    print!("{csv}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), &csv)?;
        let mut f = fs::File::create(dir.join("report.json"))?;
        let payload = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "report": &report,
        });
        writeln!(f, "{}", serde_json::to_string_pretty(&payload)?)?;
    }
    Ok(())
}

pub fn synth_kind(kind: &str) -> Result<SynthKind> {
    match kind {
        "harmonic" => Ok(SynthKind::Harmonic),
        "gp" => Ok(SynthKind::Gp),
        other => bail!("unknown corpus kind '{other}' (expected harmonic or gp)"),
    }
}
