//! Strict TOML run and sweep configurations.

use crate::CliError;
use neuron_lab::experiments::{ExperimentParams, ExperimentSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One experiment invocation. Unknown keys anywhere are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ExperimentParams,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub keep_trajectories: usize,
    pub out: Option<String>,
    pub tolerance_scale: Option<f64>,
    pub sweep: Option<SweepSpec>,
}

/// One or two swept parameter names with their grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<toml::Value>,
    pub param2: Option<String>,
    pub values2: Option<Vec<toml::Value>>,
}

pub const DEFAULT_SEED: u64 = 20240601;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_trials == Some(0) {
            return Err(CliError::Config("n_trials: must be at least 1".into()));
        }
        if let Some(s) = self.tolerance_scale {
            if !(s > 0.0) || !s.is_finite() {
                return Err(CliError::Config("tolerance_scale: must be positive".into()));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(CliError::Config("sweep.values: grid is empty".into()));
            }
            if sw.param2.is_some() != sw.values2.is_some() {
                return Err(CliError::Config("sweep: param2 and values2 go together".into()));
            }
            if sw.values2.as_ref().is_some_and(|v| v.is_empty()) {
                return Err(CliError::Config("sweep.values2: grid is empty".into()));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> ExperimentSpec {
        let id = self.params.id();
        let mut spec = ExperimentSpec::new(
            self.params.clone(),
            self.n_trials.unwrap_or(id.default_trials()),
            self.seed.unwrap_or(DEFAULT_SEED),
        );
        spec.keep_trajectories = self.keep_trajectories;
        spec
    }

    /// Copy with `name` in the parameter table replaced by `value`.
    pub fn with_param(&self, name: &str, value: &toml::Value) -> Result<Self, CliError> {
        let mut table = serde_json::to_value(&self.params).map_err(|e| CliError::Config(e.to_string()))?;
        let obj = table.as_object_mut().expect("params serialize to a table");
        if !obj.contains_key(name) {
            return Err(CliError::Config(format!("sweep: unknown parameter `{name}`")));
        }
        let v = serde_json::to_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        obj.insert(name.to_string(), v);
        let params = serde_json::from_value(table).map_err(|e| CliError::Config(format!("sweep `{name}`: {e}")))?;
        Ok(Self { params, sweep: None, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use neuron_lab::experiments::ExperimentId;

    #[test]
    fn parses_minimal_and_defaults() {
        let cfg = RunConfig::parse("[params]\nid = \"stuck_at_init\"\n").unwrap();
        let spec = cfg.spec();
        assert_eq!(spec.id(), ExperimentId::StuckAtInit);
        assert_eq!(spec.n_trials, 4000);
        assert_eq!(spec.base_seed, DEFAULT_SEED);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse("bogus = 1\n[params]\nid = \"stuck_at_init\"\n").is_err());
        let e = RunConfig::parse("[params]\nid = \"stuck_at_init\"\nepsilonn = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("epsilonn"), "{e}");
    }

    #[test]
    fn sweep_overrides_a_field() {
        let cfg = RunConfig::parse("[params]\nid = \"stuck_at_init\"\n").unwrap();
        let c2 = cfg.with_param("epsilon", &toml::Value::Float(0.02)).unwrap();
        match c2.params {
            ExperimentParams::StuckAtInit(p) => assert_eq!(p.epsilon, 0.02),
            _ => unreachable!(),
        }
        assert!(cfg.with_param("nope", &toml::Value::Float(0.02)).is_err());
    }
}
