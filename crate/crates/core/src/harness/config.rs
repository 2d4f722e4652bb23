//! JSON experiment configuration.

use crate::density::MixtureSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    File(PathBuf),
    Inline(MixtureSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSource {
    /// Evenly spaced grid; `bounds` defaults to the model box (means +- 3
    /// top standard deviations).
    Grid {
        steps: Vec<usize>,
        #[serde(default)]
        bounds: Option<(Vec<f64>, Vec<f64>)>,
    },
    /// An i.i.d. sample from the model.
    Sample { n: usize, seed: u64 },
    /// Points loaded from a CSV file (one point per row, no header).
    File(PathBuf),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OracleOverrides {
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub grad_stop_tol: Option<f64>,
    #[serde(default)]
    pub mode_match_radius: Option<f64>,
    #[serde(default)]
    pub max_arc_length: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSpec {
    Rule(String),
    Value(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    /// One of: euler_shift, euler_shift_log, level_shift, line_search_shift,
    /// max_shift, max_slope_shift, mean_shift, quick_shift, medoid_max_shift,
    /// medoid_max_slope_shift, oracle.
    pub name: String,
    /// Parameter grid: epsilon or rho values; sample sizes for mean_shift.
    pub params: Vec<f64>,
    #[serde(default)]
    pub slope_fraction: Option<f64>,
    /// Bandwidth for KDE-based algorithms: `"scott"` or a number.
    #[serde(default)]
    pub bandwidth: Option<BandwidthSpec>,
    #[serde(default)]
    pub sample_seed: Option<u64>,
    /// Endpoint snap radius; defaults to the oracle's mode_match_radius.
    #[serde(default)]
    pub match_radius: Option<f64>,
    #[serde(default)]
    pub displacement_tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    /// Neighborhood radius for the medoid algorithms (their `params` carry
    /// the medoid sample size n).
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn default_s_floor() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Starts are restricted to `{f >= s_floor_fraction * max mode height}`.
    #[serde(default = "default_s_floor")]
    pub s_floor_fraction: f64,
    pub starts: StartSource,
    #[serde(default)]
    pub oracle: OracleOverrides,
    /// Wall time is written as 0 unless enabled, keeping reports
    /// byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
    pub algorithms: Vec<AlgorithmConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        let mut cfg = Self::from_json(&text)?;
        // Paths inside the config resolve relative to the config file.
        if let Some(dir) = path.as_ref().parent() {
            if let ModelSource::File(p) = &cfg.model {
                if p.is_relative() {
                    cfg.model = ModelSource::File(dir.join(p));
                }
            }
            if let StartSource::File(p) = &cfg.starts {
                if p.is_relative() {
                    cfg.starts = StartSource::File(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithm list is empty".into()));
        }
        for a in &self.algorithms {
            if a.params.is_empty() {
                return Err(Error::Config(format!(
                    "algorithm {:?} has an empty parameter grid",
                    a.name
                )));
            }
            known_algorithm(&a.name)?;
        }
        if !(0.0..1.0).contains(&self.s_floor_fraction) {
            return Err(Error::Config("s_floor_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

pub(crate) fn known_algorithm(name: &str) -> Result<()> {
    const KNOWN: &[&str] = &[
        "oracle",
        "euler_shift",
        "euler_shift_log",
        "level_shift",
        "line_search_shift",
        "max_shift",
        "max_slope_shift",
        "mean_shift",
        "medoid_max_shift",
        "medoid_max_slope_shift",
        "quick_shift",
    ];
    if KNOWN.contains(&name) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "unknown algorithm {name:?}; known: {KNOWN:?}"
        )))
    }
}

/// Parameter column name in the report for a given algorithm.
pub fn param_name(algorithm: &str) -> &'static str {
    match algorithm {
        "max_shift" | "max_slope_shift" | "quick_shift" | "medoid_max_shift"
        | "medoid_max_slope_shift" => "epsilon",
        "mean_shift" => "n",
        "oracle" => "tol_scale",
        _ => "rho",
    }
}
