use std::path::Path;

use serde::Deserialize;

use super::model::{MarkovChainModel, RateProfile};
use crate::error::{Error, Result};

/// A rate in the config: `{ kind = "constant", value = 1.0 }`,
/// `{ kind = "linear", a = 1.0, b = 1.0 }` or
/// `{ kind = "polynomial", coeffs = [1.0, 0.0, 2.0] }`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSpec {
    Constant { value: f64 },
    Linear { a: f64, b: f64 },
    Polynomial { coeffs: Vec<f64> },
}

impl From<&ProfileSpec> for RateProfile {
    fn from(p: &ProfileSpec) -> Self {
        match p {
            ProfileSpec::Constant { value } => RateProfile::Constant(*value),
            ProfileSpec::Linear { a, b } => RateProfile::Linear { a: *a, b: *b },
            ProfileSpec::Polynomial { coeffs } => RateProfile::Polynomial(coeffs.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct RateEntry {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct LossEntry {
    pub state: usize,
    #[serde(flatten)]
    pub profile: ProfileSpec,
}

/// The `[chain]` table of an experiment config.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub states: usize,
    /// Horizon over which the rate bound is computed.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub source: Option<usize>,
    #[serde(default)]
    pub target: Option<usize>,
    #[serde(default)]
    pub hitting: Vec<usize>,
    #[serde(default)]
    pub rates: Vec<RateEntry>,
    #[serde(default)]
    pub loss: Vec<LossEntry>,
}

fn default_horizon() -> f64 {
    20.0
}

#[derive(Deserialize)]
struct Wrapper {
    chain: ChainConfig,
}

impl ChainConfig {
    /// Parses a document holding a `[chain]` table.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let w: Wrapper = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(w.chain)
    }

    /// The chain, started from `initial`, else from `source`, else state 0.
    pub fn model(&self) -> Result<MarkovChainModel> {
        let n = self.states;
        if n == 0 {
            return Err(Error::Config("a chain needs at least one state".into()));
        }
        let initial = match (&self.initial, self.source) {
            (Some(p), _) => p.clone(),
            (None, s) => {
                let s = s.unwrap_or(0);
                if s >= n {
                    return Err(Error::Config(format!("source {s} is not a state")));
                }
                (0..n).map(|i| if i == s { 1.0 } else { 0.0 }).collect()
            }
        };
        let entries = self
            .rates
            .iter()
            .map(|r| (r.from, r.to, RateProfile::from(&r.profile)))
            .collect();
        MarkovChainModel::from_profiles(n, entries, initial, self.horizon)
    }

    /// One loss profile per state, zero where none is given.
    pub fn loss_profiles(&self) -> Result<Vec<RateProfile>> {
        let mut out = vec![RateProfile::Constant(0.0); self.states];
        for l in &self.loss {
            if l.state >= self.states {
                return Err(Error::Config(format!("loss given for unknown state {}", l.state)));
            }
            out[l.state] = RateProfile::from(&l.profile);
        }
        Ok(out)
    }

    /// Hitting set: `hitting`, else `[target]`.
    pub fn hitting_set(&self) -> Result<Vec<usize>> {
        let set = if self.hitting.is_empty() {
            self.target.into_iter().collect()
        } else {
            self.hitting.clone()
        };
        if set.is_empty() {
            return Err(Error::Config("no hitting set or target given".into()));
        }
        if let Some(x) = set.iter().find(|&&x| x >= self.states) {
            return Err(Error::Config(format!("hitting state {x} is not a state")));
        }
        Ok(set)
    }
}

/// Reads a file holding a `[chain]` table.
pub fn load_chain_config(path: impl AsRef<Path>) -> Result<ChainConfig> {
    ChainConfig::from_toml_str(&std::fs::read_to_string(path)?)
}
