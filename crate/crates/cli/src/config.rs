//! TOML experiment configs.
//!
//! Precedence, highest first: command-line flags, the config file, built-in defaults.
//! The output directory falls back to `PEAKONLAB_OUT` and then to `peakonlab-out`.

use std::fmt;
use std::path::{Path, PathBuf};

use peakonlab::constants;
use peakonlab::harness::Tolerances;
use peakonlab::peakon::{PeakonTrain, PerturbedTrain, Scenario};
use serde::{Deserialize, Serialize};

pub const OUT_ENV: &str = "PEAKONLAB_OUT";
pub const DEFAULT_OUT: &str = "peakonlab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub scenario: Scenario,
    /// Explicit initial train; replaces the perturbed construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<ExplicitTrain>,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Criteria evaluated after `simulate`; empty selects the default set.
    #[serde(default)]
    pub criteria: Vec<String>,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTrain {
    pub amplitudes: Vec<f64>,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub epsilon: Vec<f64>,
    pub spacing: Vec<f64>,
    pub jobs: Option<usize>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            epsilon: constants::SWEEP_EPS.to_vec(),
            spacing: constants::SWEEP_L.to_vec(),
            jobs: None,
        }
    }
}

/// Unreadable or malformed config.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub criteria: Option<Vec<String>>,
    pub jobs: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.scenario.seed = seed;
        }
        if let Some(t) = o.t_end {
            self.scenario.t_end = t;
        }
        if let Some(c) = &o.criteria {
            self.criteria.clone_from(c);
        }
        if let Some(j) = o.jobs {
            self.sweep.jobs = Some(j);
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
        })
    }

    /// The initial datum: the explicit train when given, else the perturbed construction.
    pub fn initial(&self) -> peakonlab::Result<PerturbedTrain> {
        match &self.train {
            Some(t) => {
                let train = PeakonTrain::new(t.amplitudes.clone(), t.positions.clone())?;
                PerturbedTrain::explicit(&self.scenario, train)
            }
            None => peakonlab::peakon::build_perturbed_scenario(&self.scenario),
        }
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError(format!("cannot echo config: {e}")))
    }
}
