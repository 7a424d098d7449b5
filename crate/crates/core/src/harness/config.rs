use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::chain::ChainConfig;
use crate::error::{Error, Result};

/// Which mathematical layer a scenario exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Module {
    Timechange,
    Wiener,
    Chain,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::Timechange => "timechange",
            Module::Wiener => "wiener",
            Module::Chain => "chain",
        }
    }
}

/// One experiment run. Unset optional fields fall back to the scenario's
/// own defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub module: Option<Module>,
    pub seed: u64,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
    /// Overrides the scenario's primary tolerance.
    pub tol: Option<f64>,
    pub params: toml::Table,
    pub chain: Option<ChainConfig>,
    /// The text the config was read from, echoed into reports.
    pub source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    scenario: String,
    module: Option<Module>,
    #[serde(default = "default_seed")]
    seed: u64,
    paths: Option<usize>,
    steps: Option<usize>,
    horizon: Option<f64>,
    out: Option<PathBuf>,
    tol: Option<f64>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    experiment: ExperimentSection,
    #[serde(default)]
    params: toml::Table,
    chain: Option<ChainConfig>,
}

impl ExperimentConfig {
    /// Scenario with seed 1 and every other field defaulted.
    pub fn new(scenario: impl Into<String>) -> Self {
        let scenario = scenario.into();
        Self {
            source: format!("[experiment]\nscenario = \"{scenario}\"\n"),
            scenario,
            module: None,
            seed: 1,
            paths: None,
            steps: None,
            horizon: None,
            out: None,
            tol: None,
            params: toml::Table::new(),
            chain: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: Document = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let e = doc.experiment;
        Ok(Self {
            scenario: e.scenario,
            module: e.module,
            seed: e.seed,
            paths: e.paths,
            steps: e.steps,
            horizon: e.horizon,
            out: e.out,
            tol: e.tol,
            params: doc.params,
            chain: doc.chain,
            source: text.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = Some(paths);
        self
    }

    pub fn with_out(mut self, out: impl Into<PathBuf>) -> Self {
        self.out = Some(out.into());
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<toml::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Seed and path count must be positive.
    pub fn validate(&self) -> Result<()> {
        if self.seed == 0 {
            return Err(Error::Config("seed must be positive".into()));
        }
        if self.paths == Some(0) || self.steps == Some(0) {
            return Err(Error::Config("paths and steps must be positive".into()));
        }
        if self.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn paths_or(&self, default: usize) -> usize {
        self.paths.unwrap_or(default)
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    pub fn horizon_or(&self, default: f64) -> f64 {
        self.horizon.unwrap_or(default)
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// Numeric parameter from `[params]`; integers are accepted.
    pub fn param(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(v)) => Ok(*v),
            Some(toml::Value::Integer(v)) => Ok(*v as f64),
            Some(v) => Err(Error::Config(format!("parameter {key} must be a number, got {v}"))),
        }
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(v) => Err(Error::Config(format!(
                "parameter {key} must be a non-negative integer, got {v}"
            ))),
        }
    }
}
