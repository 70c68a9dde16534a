//! Run configuration: a TOML file with sections mirroring the library
//! configs, overridden field-by-field from command-line flags.

use anyhow::{bail, Context, Result};
use gpperiod_core::{Criterion, LowRankConfig, SearchConfig, SubsampleConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gp,
    Ls,
    Pdm,
    #[serde(rename = "gp+ls")]
    #[clap(name = "gp+ls")]
    GpLs,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Gp => "gp",
            Method::Ls => "ls",
            Method::Pdm => "pdm",
            Method::GpLs => "gp+ls",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CriterionOpt {
    Ml,
    Cv,
    Map,
}

impl std::fmt::Display for CriterionOpt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CriterionOpt::Ml => "ml",
            CriterionOpt::Cv => "cv",
            CriterionOpt::Map => "map",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    None,
    Filter,
    Double,
    Combine,
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FilterMode::None => "none",
            FilterMode::Filter => "filter",
            FilterMode::Double => "double",
            FilterMode::Combine => "combine",
        })
    }
}

/// Prior/filter layer settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub gamma: f64,
    pub n_harmonics: usize,
    pub ridge: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            n_harmonics: 3,
            ridge: 1e-6,
        }
    }
}

/// Top-level run settings. `filter = None` means "not set"; it resolves to
/// `combine` for gp+ls and to no filtering otherwise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    pub method: Method,
    pub criterion: CriterionOpt,
    pub filter: Option<FilterMode>,
    pub seed: u64,
    pub subsample: bool,
    pub lowrank: bool,
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            method: Method::Gp,
            criterion: CriterionOpt::Ml,
            filter: None,
            seed: 0,
            subsample: false,
            lowrank: false,
            workers: 0, // 0 = rayon default
        }
    }
}

/// Complete configuration, assembled from defaults, the optional config
/// file, and flag overrides (flags win).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub run: RunSection,
    pub search: SearchConfig,
    pub subsample: SubsampleConfig,
    pub lowrank: LowRankConfig,
    pub prior: PriorConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        Ok(cfg)
    }

    /// Filter mode with the gp+ls default applied.
    pub fn filter_mode(&self) -> FilterMode {
        self.run.filter.unwrap_or(match self.run.method {
            Method::GpLs => FilterMode::Combine,
            _ => FilterMode::None,
        })
    }

    /// Cross-field checks that individual parsers cannot see.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.prior.gamma) {
            bail!("gamma must be in [0, 1], got {}", self.prior.gamma);
        }
        if self.filter_mode() == FilterMode::Combine && self.run.method != Method::GpLs {
            bail!("--filter combine requires --method gp+ls");
        }
        if self.run.method == Method::GpLs && self.filter_mode() != FilterMode::Combine {
            bail!("--method gp+ls requires --filter combine");
        }
        if self.run.criterion == CriterionOpt::Map && self.run.method != Method::Gp {
            bail!("--criterion map applies to --method gp only");
        }
        self.search
            .validate()
            .map_err(|e| anyhow::anyhow!("search config: {e}"))?;
        Ok(())
    }

    pub fn criterion(&self) -> Criterion {
        match self.run.criterion {
            CriterionOpt::Cv => Criterion::Cv,
            // MAP blends on top of the ML score
            CriterionOpt::Ml | CriterionOpt::Map => Criterion::Ml,
        }
    }
}
