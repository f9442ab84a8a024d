//! TOML run configuration.

use std::path::Path;

use bathdiff_core::experiments::{HeatmapConfig, RunOptions, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MAX_DIM_ENV: &str = "BATHDIFF_MAX_DIM";

/// Overrides for [`RunOptions`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_dim: Option<usize>,
    pub dense_threshold: Option<usize>,
    pub krylov_tolerance: Option<f64>,
}

/// A config file: `[scenario]`, `[heatmap]` and `[limits]`, all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Option<ScenarioConfig>,
    pub heatmap: Option<HeatmapConfig>,
    #[serde(default)]
    pub limits: Limits,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Run limits from the config, with `BATHDIFF_MAX_DIM` taking precedence.
    pub fn run_options(&self, env_max_dim: Option<&str>) -> Result<RunOptions, CliError> {
        let mut options = RunOptions::default();
        if let Some(d) = self.limits.max_dim {
            options.max_dim = d;
        }
        if let Some(d) = self.limits.dense_threshold {
            options.dense_threshold = d;
        }
        if let Some(tol) = self.limits.krylov_tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Config(format!(
                    "krylov_tolerance must be positive, got {tol}"
                )));
            }
            options.krylov.tolerance = tol;
        }
        if let Some(raw) = env_max_dim {
            options.max_dim = raw.trim().parse().map_err(|_| {
                CliError::Config(format!("{MAX_DIM_ENV}={raw:?} is not a dimension"))
            })?;
        }
        if options.max_dim == 0 {
            return Err(CliError::Config("max_dim must be positive".into()));
        }
        Ok(options)
    }
}
