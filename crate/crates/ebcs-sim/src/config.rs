//! Run configuration: a TOML file with every knob of the simulator. Any
//! omitted field takes the standard default, so an empty file reproduces the
//! reference setup; invariant violations are rejected with a field path.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, RadioParams, RateTable, DEFAULT_RATES_MBPS};
use crate::dqn::{DeploymentRanges, TrainConfig};
use crate::policy::Method;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }
}

/// Which deployment parameter an evaluation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "distance")]
    Distance,
    #[serde(rename = "radius")]
    Radius,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance",
            SweepAxis::Radius => "radius",
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance" => Ok(SweepAxis::Distance),
            "radius" => Ok(SweepAxis::Radius),
            other => Err(format!("unknown sweep axis '{other}' (expected distance or radius)")),
        }
    }
}

/// Test-phase settings: episodes per sweep point, steps per episode, the
/// sweep axis with its grid, and the pinned value of the other axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub steps: usize,
    pub sweep: SweepAxis,
    /// Sweep grid; when omitted the axis default applies
    /// (distance: 20..100 m in steps of 20; radius: 5..30 m in steps of 5).
    pub values: Option<Vec<f64>>,
    /// Farthest-AP distance pinned during a radius sweep.
    pub fixed_distance_b_m: f64,
    /// BSS radius pinned during a distance sweep.
    pub fixed_bss_radius_m: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 1_000,
            steps: 100,
            sweep: SweepAxis::Distance,
            values: None,
            fixed_distance_b_m: 40.0,
            fixed_bss_radius_m: 10.0,
        }
    }
}

impl EvalConfig {
    pub fn sweep_values(&self) -> Vec<f64> {
        match &self.values {
            Some(v) => v.clone(),
            None => match self.sweep {
                SweepAxis::Distance => vec![20.0, 40.0, 60.0, 80.0, 100.0],
                SweepAxis::Radius => vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            },
        }
    }
}

/// Output locations; all overridable on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub weights_path: PathBuf,
    pub curve_path: PathBuf,
    pub metrics_path: PathBuf,
    pub deployments_path: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            weights_path: PathBuf::from("weights.json"),
            curve_path: PathBuf::from("learning_curve.csv"),
            metrics_path: PathBuf::from("metrics.csv"),
            deployments_path: PathBuf::from("deployments.json"),
        }
    }
}

/// Everything one run needs. The top-level `seed` drives training and
/// evaluation; `scenario.seed` only seeds standalone deployment export.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub method: Option<Method>,
    pub radio: RadioParams,
    pub rates: RatesConfig,
    pub scenario: ScenarioConfig,
    pub train: TrainConfig,
    pub training_deployments: DeploymentRanges,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesConfig {
    pub mbps: Vec<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self { mbps: DEFAULT_RATES_MBPS.to_vec() }
    }
}

impl RunConfig {
    /// Parses and validates a TOML config.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.radio
            .validate()
            .map_err(|(field, message)| ConfigError::invalid(format!("radio.{field}"), message))?;
        self.rate_table()?;
        self.scenario.validate().map_err(|e| match e {
            crate::scenario::ScenarioError::InvalidConfig { field, message } => {
                ConfigError::invalid(format!("scenario.{field}"), message)
            }
            other => ConfigError::invalid("scenario", other.to_string()),
        })?;
        self.train.validate().map_err(|e| match e {
            crate::dqn::DqnError::InvalidTrainConfig { field, message } => {
                ConfigError::invalid(format!("train.{field}"), message)
            }
            other => ConfigError::invalid("train", other.to_string()),
        })?;
        self.training_deployments.validate().map_err(|e| match e {
            crate::dqn::DqnError::InvalidTrainConfig { field, message } => {
                ConfigError::invalid(field, message)
            }
            other => ConfigError::invalid("training_deployments", other.to_string()),
        })?;
        if self.eval.episodes == 0 {
            return Err(ConfigError::invalid("eval.episodes", "must be at least 1"));
        }
        if self.eval.steps == 0 {
            return Err(ConfigError::invalid("eval.steps", "must be at least 1"));
        }
        if let Some(values) = &self.eval.values {
            if values.is_empty() {
                return Err(ConfigError::invalid("eval.values", "must not be empty"));
            }
            let half = self.scenario.region_side_m / 2.0;
            for &v in values {
                let bad = match self.eval.sweep {
                    SweepAxis::Distance => !(v >= 0.0 && v <= half),
                    SweepAxis::Radius => !(v >= 0.0),
                };
                if bad {
                    return Err(ConfigError::invalid(
                        "eval.values",
                        format!("value {v} out of range for a {} sweep", self.eval.sweep),
                    ));
                }
            }
        }
        if !(self.eval.fixed_distance_b_m >= 0.0
            && self.eval.fixed_distance_b_m <= self.scenario.region_side_m / 2.0)
        {
            return Err(ConfigError::invalid(
                "eval.fixed_distance_b_m",
                format!("must be within half the region side, got {}", self.eval.fixed_distance_b_m),
            ));
        }
        if !(self.eval.fixed_bss_radius_m >= 0.0) {
            return Err(ConfigError::invalid(
                "eval.fixed_bss_radius_m",
                format!("must be non-negative, got {}", self.eval.fixed_bss_radius_m),
            ));
        }
        Ok(())
    }

    /// Builds the validated rate table for this configuration.
    pub fn rate_table(&self) -> Result<RateTable, ConfigError> {
        RateTable::new(self.rates.mbps.clone(), &self.radio).map_err(|e| match e {
            ChannelError::EmptyRateTable => ConfigError::invalid("rates.mbps", "must not be empty"),
            other => ConfigError::invalid("rates.mbps", other.to_string()),
        })
    }

    /// Observation encoder consistent with the scenario geometry.
    pub fn state_encoder(&self) -> crate::env::StateEncoder {
        crate::env::StateEncoder::new(self.scenario.frames_per_step, self.scenario.num_bss)
    }
}
