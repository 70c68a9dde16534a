//! `gpperiod` — period estimation for irregularly sampled time series.
//!
//! Subcommands: `fit` one series, `batch` a manifest of series, `synth`
//! generate test corpora, `eval` run the benchmark harness.
//!
//! Exit codes: 0 success, 2 usage/input error, 1 internal error.

mod commands;
mod config;

use anyhow::{Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use commands::{cmd_batch, cmd_eval, cmd_fit, cmd_synth, parse_method_list, synth_kind, EvalArgs};
use config::{CriterionOpt, FilterMode, Method, RunConfig};
use gpperiod_core::SynthSpec;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gpperiod", version, about)]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonFlags {
    /// Config file (TOML); flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Estimation method
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Model-selection criterion for the GP path
    #[arg(long, global = true, value_enum)]
    criterion: Option<CriterionOpt>,
    /// MAP tradeoff γ between GP evidence and the domain prior
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Candidate post-processing
    #[arg(long, global = true, value_enum)]
    filter: Option<FilterMode>,
    /// Ensemble-subsample the coarse scan
    #[arg(long, global = true, action = ArgAction::SetTrue, overrides_with = "no_subsample")]
    subsample: bool,
    #[arg(long, global = true, action = ArgAction::SetTrue, overrides_with = "subsample", hide = true)]
    no_subsample: bool,
    /// Low-rank ε-net fine scan
    #[arg(long, global = true, action = ArgAction::SetTrue, overrides_with = "no_lowrank")]
    lowrank: bool,
    #[arg(long, global = true, action = ArgAction::SetTrue, overrides_with = "lowrank", hide = true)]
    no_lowrank: bool,
    /// Output directory for artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the period of one lightcurve file
    Fit {
        /// Input file: `time magnitude [error]` rows, `#` comments
        input: PathBuf,
    },
    /// Process every series in a manifest (`path [true_period]` rows)
    Batch {
        manifest: PathBuf,
    },
    /// Generate a synthetic corpus with a truth manifest
    Synth {
        /// Corpus kind: harmonic | gp
        #[arg(long, default_value = "harmonic")]
        kind: String,
        #[arg(long, default_value_t = 50)]
        n_series: usize,
        #[arg(long, default_value_t = 100)]
        n_samples: usize,
        #[arg(long, default_value_t = 0.1)]
        noise_var: f64,
        #[arg(long, default_value_t = -5.0)]
        time_lo: f64,
        #[arg(long, default_value_t = 5.0)]
        time_hi: f64,
    },
    /// Benchmark methods over a synthetic corpus
    Eval {
        /// Corpus kind: harmonic | gp
        #[arg(long, default_value = "gp")]
        kind: String,
        /// Comma-separated: gp, sgp, sgp+lowr, ls, pdm
        #[arg(long, default_value = "gp,ls,pdm")]
        methods: String,
        /// Comma-separated subset sizes
        #[arg(long, default_value = "10,20,30,40,50,60,70,80,90,100")]
        sizes: String,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 50)]
        n_series: usize,
        #[arg(long, default_value_t = 100)]
        n_samples: usize,
        #[arg(long, default_value_t = 0.1)]
        noise_var: f64,
        /// Cyclic iterations for the GP variants
        #[arg(long, default_value_t = 2)]
        iterations: usize,
    },
}

/// Usage and input problems exit 2; unexpected internal failures exit 1.
#[derive(Debug)]
enum CliError {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

fn merge_config(flags: &CommonFlags) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = flags.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = flags.method {
        cfg.run.method = v;
    }
    if let Some(v) = flags.criterion {
        cfg.run.criterion = v;
    }
    if let Some(v) = flags.gamma {
        cfg.prior.gamma = v;
    }
    if let Some(v) = flags.filter {
        cfg.run.filter = Some(v);
    }
    if flags.subsample {
        cfg.run.subsample = true;
    }
    if flags.no_subsample {
        cfg.run.subsample = false;
    }
    if flags.lowrank {
        cfg.run.lowrank = true;
    }
    if flags.no_lowrank {
        cfg.run.lowrank = false;
    }
    if let Some(v) = flags.workers {
        cfg.run.workers = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = merge_config(&cli.common).map_err(CliError::Input)?;
    if cfg.run.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.workers)
            .build_global()
            .context("worker pool")
            .map_err(CliError::Internal)?;
    }
    let out = cli.common.out.as_deref();
    match cli.cmd {
        Cmd::Fit { input } => cmd_fit(&input, &cfg, out).map_err(CliError::Input),
        Cmd::Batch { manifest } => cmd_batch(&manifest, &cfg, out).map_err(CliError::Input),
        Cmd::Synth {
            kind,
            n_series,
            n_samples,
            noise_var,
            time_lo,
            time_hi,
        } => {
            let spec = SynthSpec {
                kind: synth_kind(&kind).map_err(CliError::Input)?,
                n_series,
                n_samples,
                time_range: (time_lo, time_hi),
                noise_var,
                seed: cfg.run.seed,
            };
            let out = out
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("corpus"));
            cmd_synth(&spec, &out).map_err(CliError::Input)
        }
        Cmd::Eval {
            kind,
            methods,
            sizes,
            reps,
            n_series,
            n_samples,
            noise_var,
            iterations,
        } => {
            let kind = synth_kind(&kind).map_err(CliError::Input)?;
            let methods = parse_method_list(&methods, cfg.criterion(), iterations)
                .map_err(CliError::Input)?;
            let sizes: Result<Vec<usize>> = sizes
                .split(',')
                .map(|s| s.trim().parse::<usize>().context("bad size list"))
                .collect();
            let args = EvalArgs {
                spec: SynthSpec {
                    kind,
                    n_series,
                    n_samples,
                    time_range: (-5.0, 5.0),
                    noise_var,
                    seed: cfg.run.seed,
                },
                methods,
                sizes: sizes.map_err(CliError::Input)?,
                reps,
            };
            cmd_eval(&args, out).map_err(CliError::Input)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
