//! Declarative experiment description, stored as TOML.
//!
//! ```toml
//! scenario = "bernoulli9"     # or an inline arm table plus `plays`
//! horizon = 100000
//! reps = 50
//! seed = 7
//!
//! [[policies]]
//! kind = "orchexplore"
//!
//! [[policies]]
//! kind = "mpsesa"
//! gamma = 0.1
//! ```
//!
//! Inline arms:
//!
//! ```toml
//! plays = 2
//! [[arms]]
//! mean = 0.9
//! capacity = 2
//! distribution = "gaussian"
//! variance = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::builtin_scenario;
use crate::env::{ArmSpec, Environment};
use crate::error::{Error, Result};
use crate::policies::PolicySpec;

pub const DEFAULT_REPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionName {
    #[default]
    Bernoulli,
    Gaussian,
}

/// One row of an inline arm table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmEntry {
    pub mean: f64,
    pub capacity: u32,
    #[serde(default)]
    pub distribution: DistributionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
}

impl ArmEntry {
    fn to_spec(&self, index: usize) -> Result<ArmSpec> {
        match (self.distribution, self.variance) {
            (DistributionName::Bernoulli, None) => Ok(ArmSpec::bernoulli(self.mean, self.capacity)),
            (DistributionName::Bernoulli, Some(_)) => Err(Error::Config(format!(
                "arms[{index}].variance: not allowed for a bernoulli arm"
            ))),
            (DistributionName::Gaussian, Some(v)) => Ok(ArmSpec::gaussian(self.mean, self.capacity, v)),
            (DistributionName::Gaussian, None) => Err(Error::Config(format!(
                "arms[{index}].variance: required for a gaussian arm"
            ))),
        }
    }

    pub fn from_spec(spec: &ArmSpec) -> Self {
        let (distribution, variance) = match spec.distribution {
            crate::env::RewardDistribution::Bernoulli => (DistributionName::Bernoulli, None),
            crate::env::RewardDistribution::Gaussian { variance } => (DistributionName::Gaussian, Some(variance)),
        };
        Self {
            mean: spec.mean,
            capacity: spec.capacity,
            distribution,
            variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plays: Option<u32>,
    pub horizon: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Log every `stride`-th slot; defaults to `max(1, T / 1000)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    /// Worker threads for replications; machine parallelism when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub policies: Vec<PolicySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arms: Vec<ArmEntry>,
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

impl ExperimentConfig {
    pub fn for_scenario(scenario: &str, horizon: u64, reps: usize, seed: u64, policies: Vec<PolicySpec>) -> Self {
        Self {
            scenario: Some(scenario.to_string()),
            plays: None,
            horizon,
            reps,
            seed,
            stride: None,
            threads: None,
            out: None,
            policies,
            arms: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// Slot spacing of the logged regret grid.
    pub fn stride(&self) -> u64 {
        self.stride.unwrap_or((self.horizon / 1000).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps: must be at least 1".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride: must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads: must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("policies: at least one policy is required".into()));
        }
        match (&self.scenario, self.arms.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config("arms: give either `scenario` or an arm table, not both".into()))
            }
            (None, true) => return Err(Error::Config("scenario: missing (or give an arm table)".into())),
            (Some(_), true) if self.plays.is_some() => {
                return Err(Error::Config("plays: taken from the scenario, remove it".into()))
            }
            (None, false) if self.plays.is_none() => {
                return Err(Error::Config("plays: required with an arm table".into()))
            }
            _ => {}
        }
        self.environment().map(|_| ())
    }

    pub fn environment(&self) -> Result<Environment> {
        if let Some(name) = &self.scenario {
            return builtin_scenario(name);
        }
        let arms = self
            .arms
            .iter()
            .enumerate()
            .map(|(i, a)| a.to_spec(i))
            .collect::<Result<Vec<_>>>()?;
        Environment::new(arms, self.plays.unwrap_or(0), self.seed).map_err(|e| Error::Config(format!("arms: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyKind;

    #[test]
    fn scenario_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
scenario = "bernoulli9"
horizon = 10000
[[policies]]
kind = "orchexplore"
[[policies]]
kind = "mpsesa"
gamma = 0.1
width = "hfd"
"#,
        )
        .unwrap();
        assert_eq!(cfg.reps, 200);
        assert_eq!(cfg.stride(), 10);
        assert_eq!(cfg.policies[1].kind, PolicyKind::Mpsesa);
        assert_eq!(cfg.policies[1].gamma, 0.1);
        assert_eq!(cfg.environment().unwrap().num_arms(), 9);
    }

    #[test]
    fn inline_arms() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
plays = 2
horizon = 10
[[policies]]
kind = "etcucb"
[[arms]]
mean = 0.9
capacity = 2
distribution = "gaussian"
variance = 0.5
[[arms]]
mean = 0.4
capacity = 1
"#,
        )
        .unwrap();
        let env = cfg.environment().unwrap();
        assert_eq!(env.capacities(), vec![2, 1]);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad_key = ExperimentConfig::from_toml_str("scenario = \"bernoulli9\"\nhorizon = 1\nhorizn = 3\npolicies = []\n")
            .unwrap_err()
            .to_string();
        assert!(bad_key.contains("horizn"), "{bad_key}");
        assert!(bad_key.contains("line 3"), "{bad_key}");

        let bad_type = ExperimentConfig::from_toml_str("scenario = \"bernoulli9\"\nhorizon = \"many\"\n")
            .unwrap_err()
            .to_string();
        assert!(bad_type.contains("line 2"), "{bad_type}");

        let missing_var = ExperimentConfig::from_toml_str(
            "plays = 1\nhorizon = 5\n[[policies]]\nkind = \"optimal\"\n[[arms]]\nmean = 0.5\ncapacity = 1\ndistribution = \"gaussian\"\n",
        )
        .unwrap_err()
        .to_string();
        assert!(missing_var.contains("arms[0].variance"), "{missing_var}");

        let zero_reps =
            ExperimentConfig::from_toml_str("scenario = \"bernoulli9\"\nhorizon = 5\nreps = 0\n[[policies]]\nkind = \"optimal\"\n")
                .unwrap_err()
                .to_string();
        assert!(zero_reps.contains("reps"), "{zero_reps}");
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::for_scenario("gaussian9", 500, 3, 11, vec![PolicySpec::new(PolicyKind::Mpse)]);
        cfg.stride = Some(7);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
