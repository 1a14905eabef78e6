use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::{EstimateKind, DEFAULT_MC_SAMPLES, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::evolver::EvolverConfig;
use crate::paths::{DEFAULT_FEATURES, DEFAULT_PARETO_POINTS};

/// How the next evaluation is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Entropy(EstimateKind),
    Random,
    Tsemo,
    Parego,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "tsemo" => Ok(Self::Tsemo),
            "parego" => Ok(Self::Parego),
            _ => s.parse().map(Self::Entropy),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Entropy(k) => write!(f, "{k}"),
            Self::Random => write!(f, "random"),
            Self::Tsemo => write!(f, "tsemo"),
            Self::Parego => write!(f, "parego"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub acquisition: String,
    #[serde(default = "one")]
    pub q: usize,
    /// Defaults to 2(D + 1).
    #[serde(default)]
    pub n_init: Option<usize>,
    pub n_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "S", default = "default_samples")]
    pub num_samples: usize,
    #[serde(rename = "p", default = "default_points")]
    pub pareto_points: usize,
    #[serde(rename = "I", default = "default_mc")]
    pub mc_samples: usize,
    #[serde(rename = "L", default = "default_features")]
    pub features: usize,
    #[serde(default)]
    pub evolver: EvolverConfig,
    /// Defaults to 1000·D.
    #[serde(default)]
    pub candidate_pool: Option<usize>,
    #[serde(default = "default_recommendation")]
    pub recommendation_size: usize,
}

fn one() -> usize {
    1
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_points() -> usize {
    DEFAULT_PARETO_POINTS
}
fn default_mc() -> usize {
    DEFAULT_MC_SAMPLES
}
fn default_features() -> usize {
    DEFAULT_FEATURES
}
fn default_recommendation() -> usize {
    50
}

impl ExperimentConfig {
    pub fn new(problem: &str, acquisition: &str, n_iter: usize, seed: u64) -> Self {
        Self {
            problem: problem.into(),
            acquisition: acquisition.into(),
            q: 1,
            n_init: None,
            n_iter,
            seed,
            num_samples: DEFAULT_SAMPLES,
            pareto_points: DEFAULT_PARETO_POINTS,
            mc_samples: DEFAULT_MC_SAMPLES,
            features: DEFAULT_FEATURES,
            evolver: EvolverConfig::default(),
            candidate_pool: None,
            recommendation_size: default_recommendation(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn method(&self) -> Result<Method> {
        self.acquisition.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.method()?;
        self.evolver.validate()?;
        let counts = [
            ("q", self.q),
            ("S", self.num_samples),
            ("p", self.pareto_points),
            ("I", self.mc_samples),
            ("L", self.features),
            ("recommendation_size", self.recommendation_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("`{name}` must be at least 1")));
            }
        }
        if self.n_init.is_some_and(|n| n < 2) {
            return Err(Error::Config("`n_init` must be at least 2".into()));
        }
        if self.candidate_pool.is_some_and(|n| n < self.q) {
            return Err(Error::Config("`candidate_pool` must be at least `q`".into()));
        }
        Ok(())
    }

    pub fn n_init_for(&self, dim: usize) -> usize {
        self.n_init.unwrap_or(2 * (dim + 1))
    }

    pub fn pool_for(&self, dim: usize) -> usize {
        self.candidate_pool.unwrap_or(1000 * dim)
    }
}
