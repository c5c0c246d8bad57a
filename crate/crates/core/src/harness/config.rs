use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::error::{Error, Result};
use crate::predictors::Predictor;

/// Full description of one attack run. Serialized as a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub predictor: Predictor,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_n_cap")]
    pub n_cap: usize,
    #[serde(default)]
    pub interaction: InteractionConfig,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub agent: AgentConfig,
    pub seeds: Seeds,
}

fn default_delta() -> f64 {
    0.02
}

fn default_n_cap() -> usize {
    1000
}

fn default_instances() -> usize {
    10
}

fn default_snapshots() -> usize {
    10
}

fn default_base_density() -> f64 {
    0.1
}

fn default_deletion_prob() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic(SyntheticConfig),
    EdgeStream {
        path: PathBuf,
        /// Input snapshots per instance; each window spans `snapshots + 1` timestamps.
        #[serde(default = "default_snapshots")]
        snapshots: usize,
    },
}

impl DatasetConfig {
    pub fn snapshots(&self) -> usize {
        match self {
            DatasetConfig::Synthetic(s) => s.snapshots,
            DatasetConfig::EdgeStream { snapshots, .. } => *snapshots,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub nodes: usize,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_base_density")]
    pub base_density: f64,
    #[serde(default = "default_deletion_prob")]
    pub deletion_prob: f64,
}

/// Interaction limit `I`, absolute or as a multiple of `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionConfig {
    MultipleOfK(u64),
    Absolute(u64),
}

impl Default for InteractionConfig {
    fn default() -> Self {
        InteractionConfig::MultipleOfK(5)
    }
}

impl InteractionConfig {
    pub fn resolve(self, k_limit: usize) -> u64 {
        match self {
            InteractionConfig::MultipleOfK(c) => c * k_limit as u64,
            InteractionConfig::Absolute(i) => i,
        }
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One agent shared by all instances.
    #[default]
    GseMetp,
    /// A fresh agent per instance.
    Gse,
    /// Uniform random actions.
    Random,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::GseMetp => "gse_metp",
            Method::Gse => "gse",
            Method::Random => "random",
        }
    }

    pub const ALL: [Method; 3] = [Method::GseMetp, Method::Gse, Method::Random];
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gse_metp" => Ok(Method::GseMetp),
            "gse" => Ok(Method::Gse),
            "random" => Ok(Method::Random),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Every source of randomness is seeded explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Synthetic graph generation.
    pub data: u64,
    /// Noise columns of the degree feature.
    pub feature: u64,
    /// Network initialization.
    pub init: u64,
    /// Exploration, random actions and replay sampling.
    pub exploration: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::Config("instance count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) || self.delta == 0.0 {
            return Err(Error::Config(format!(
                "delta {} outside (0, 1]",
                self.delta
            )));
        }
        if self.n_cap == 0 {
            return Err(Error::Config("n_cap must be positive".into()));
        }
        match self.interaction {
            InteractionConfig::MultipleOfK(0) | InteractionConfig::Absolute(0) => {
                return Err(Error::Config("interaction limit must be positive".into()))
            }
            _ => {}
        }
        if self.dataset.snapshots() == 0 {
            return Err(Error::Config("need at least one input snapshot".into()));
        }
        if let DatasetConfig::Synthetic(s) = &self.dataset {
            if s.nodes < 2 {
                return Err(Error::Config(format!("{} nodes", s.nodes)));
            }
            for (name, p) in [
                ("base_density", s.base_density),
                ("deletion_prob", s.deletion_prob),
            ] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
                }
            }
        }
        self.predictor.validate()?;
        self.agent.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": {"synthetic": {"nodes": 274}},
        "seeds": {"data": 1, "feature": 2, "init": 3, "exploration": 4}
    }"#;

    #[test]
    fn defaults_match_reference_protocol() {
        let config = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(config.delta, 0.02);
        assert_eq!(config.n_cap, 1000);
        assert_eq!(config.interaction, InteractionConfig::MultipleOfK(5));
        assert_eq!(config.instances, 10);
        assert_eq!(config.dataset.snapshots(), 10);
        assert_eq!(config.method, Method::GseMetp);
        assert_eq!(config.predictor, Predictor::default());
    }

    #[test]
    fn seeds_are_mandatory() {
        let text = r#"{"dataset": {"synthetic": {"nodes": 20}}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"seeds\"", "\"bogus\": 1, \"seeds\"");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut config = ExperimentConfig::from_json(MINIMAL).unwrap();
        config.instances = 0;
        assert!(config.validate().is_err());
        let mut config = ExperimentConfig::from_json(MINIMAL).unwrap();
        config.interaction = InteractionConfig::Absolute(0);
        assert!(config.validate().is_err());
        let mut config = ExperimentConfig::from_json(MINIMAL).unwrap();
        config.dataset = DatasetConfig::Synthetic(SyntheticConfig {
            nodes: 10,
            snapshots: 3,
            base_density: 1.5,
            deletion_prob: 0.1,
        });
        assert!(config.validate().is_err());
    }

    #[test]
    fn interaction_resolution() {
        assert_eq!(InteractionConfig::MultipleOfK(5).resolve(751), 3755);
        assert_eq!(InteractionConfig::Absolute(12).resolve(751), 12);
    }
}
