//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::optimizers::Algorithm;
use crate::sim::{InitPolicy, RegretMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Sparsity-constrained comparison of the configured algorithms.
    ConstrainedCompare,
    /// Constrained runs over a grid of variation factors.
    VariationSweep,
    /// No constraint; comparators are DARE gains.
    UnconstrainedSanity,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::ConstrainedCompare => "constrained_compare",
            ScenarioKind::VariationSweep => "variation_sweep",
            ScenarioKind::UnconstrainedSanity => "unconstrained_sanity",
        }
    }
}

fn default_n() -> usize {
    6
}
fn default_m() -> usize {
    3
}
fn default_plant_seed() -> u64 {
    1
}
fn default_mask_seed() -> u64 {
    2
}
fn default_cost_seed() -> u64 {
    3
}
fn default_master_seed() -> u64 {
    4
}
fn default_target_rho() -> f64 {
    0.8
}
fn default_mask_density() -> f64 {
    0.5
}
fn default_variation_factor() -> f64 {
    0.5
}
fn default_variation_factors() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}
fn default_horizon() -> usize {
    200
}
fn default_runs() -> usize {
    30
}
fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}
fn default_comparator_tol() -> f64 {
    1e-9
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_scenario() -> ScenarioKind {
    ScenarioKind::ConstrainedCompare
}
fn default_regret_mode() -> RegretMode {
    RegretMode::Realized
}
fn default_init() -> InitPolicy {
    InitPolicy::OfflineConverged
}

/// Every key is optional; missing keys take the defaults below and unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_plant_seed")]
    pub plant_seed: u64,
    #[serde(default = "default_mask_seed")]
    pub mask_seed: u64,
    #[serde(default = "default_cost_seed")]
    pub cost_seed: u64,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default = "default_target_rho")]
    pub target_rho: f64,
    #[serde(default = "default_mask_density")]
    pub mask_density: f64,
    #[serde(default = "default_variation_factor")]
    pub variation_factor: f64,
    /// Grid used by the variation sweep.
    #[serde(default = "default_variation_factors")]
    pub variation_factors: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_comparator_tol")]
    pub comparator_tol: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_scenario")]
    pub scenario: ScenarioKind,
    #[serde(default = "default_regret_mode")]
    pub regret_mode: RegretMode,
    #[serde(default = "default_init")]
    pub init: InitPolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// A configuration problem attributed to one key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.to_string();
            let key = if path == "." {
                unknown_field(&msg).unwrap_or_else(|| "<root>".to_string())
            } else {
                path
            };
            ConfigError::new(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be at least 1"));
        }
        if self.m == 0 {
            return Err(ConfigError::new("m", "must be at least 1"));
        }
        if !(self.target_rho > 0.0 && self.target_rho < 1.0) {
            return Err(ConfigError::new("target_rho", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.mask_density) {
            return Err(ConfigError::new("mask_density", "must lie in [0, 1]"));
        }
        if !(self.variation_factor >= 0.0 && self.variation_factor.is_finite()) {
            return Err(ConfigError::new("variation_factor", "must be finite and non-negative"));
        }
        if self.variation_factors.is_empty() {
            return Err(ConfigError::new("variation_factors", "must not be empty"));
        }
        if self.variation_factors.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(ConfigError::new("variation_factors", "entries must be finite and non-negative"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(ConfigError::new("runs", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::new("algorithms", "must list at least one algorithm"));
        }
        let mut seen = self.algorithms.clone();
        seen.sort_by_key(|a| a.as_str());
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(ConfigError::new("algorithms", "contains duplicates"));
        }
        if !(self.comparator_tol > 0.0 && self.comparator_tol.is_finite()) {
            return Err(ConfigError::new("comparator_tol", "must be positive"));
        }
        Ok(())
    }
}

fn unknown_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!((cfg.n, cfg.m, cfg.horizon, cfg.runs), (6, 3, 200, 30));
        assert_eq!(cfg.algorithms, Algorithm::ALL.to_vec());
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_json(r#"{"n": 2, "horizn": 5}"#).unwrap_err();
        assert_eq!(err.key, "horizn");
    }

    #[test]
    fn bad_type_is_named() {
        let err = ExperimentConfig::from_json(r#"{"runs": "many"}"#).unwrap_err();
        assert_eq!(err.key, "runs");
        let err = ExperimentConfig::from_json(r#"{"algorithms": ["onm", "newton"]}"#).unwrap_err();
        assert!(err.key.starts_with("algorithms"));
    }

    #[test]
    fn invalid_values_are_named() {
        assert_eq!(ExperimentConfig::from_json(r#"{"target_rho": 1.2}"#).unwrap_err().key, "target_rho");
        assert_eq!(ExperimentConfig::from_json(r#"{"horizon": 0}"#).unwrap_err().key, "horizon");
        assert_eq!(
            ExperimentConfig::from_json(r#"{"algorithms": ["pg", "pg"]}"#).unwrap_err().key,
            "algorithms"
        );
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = ExperimentConfig::from_json(r#"{"n": 3, "scenario": "variation_sweep"}"#).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
