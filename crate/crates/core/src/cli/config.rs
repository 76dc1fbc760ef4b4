use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::chain::ChainConfig;
use crate::error::{Error, Result};
use crate::gaussian::KappaMethod;
use crate::sim::SimSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScgfTask {
    pub lambda_grid: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RateSourceKind {
    Gaussian,
    Riccati,
    Limit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTask {
    pub j_grid: Vec<f64>,
    pub source: RateSourceKind,
    /// Transform grid for the sampled sources.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prop4Task {
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    pub lambda_prime: f64,
    pub tau_prime: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaTask {
    pub method: KappaMethod,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcTask {
    pub bins: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdbTask {
    pub max_degree: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovTask {
    #[serde(default)]
    pub b: Option<f64>,
    pub probes: usize,
    pub checks: usize,
}

/// A single archived experiment: the chain, optional simulation settings, at
/// most one task block and the output target.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scgf: Option<ScgfTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop4: Option<Prop4Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc: Option<GcTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gdb: Option<GdbTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name} contains a non-finite value")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let blocks = [
            self.scgf.is_some(),
            self.rate.is_some(),
            self.prop4.is_some(),
            self.kappa.is_some(),
            self.gc.is_some(),
            self.gdb.is_some(),
            self.lyapunov.is_some(),
        ];
        if blocks.iter().filter(|b| **b).count() > 1 {
            return Err(Error::Config("a config holds at most one task block".into()));
        }
        if let Some(t) = &self.scgf {
            check_grid("lambda_grid", &t.lambda_grid)?;
        }
        if let Some(t) = &self.rate {
            check_grid("j_grid", &t.j_grid)?;
            if let Some(g) = &t.lambda_grid {
                check_grid("lambda_grid", g)?;
            }
        }
        if let Some(t) = &self.prop4 {
            if t.n_list.is_empty() || t.n_list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("N_list must be non-empty and strictly increasing".into()));
            }
        }
        Ok(())
    }
}
