//! Scenario registry, experiment configs, report bundles and seed sweeps.
//!
//! A config is TOML with an `[experiment]` table (scenario, seed, paths,
//! steps, horizon, out, tol), an optional `[params]` table of scenario
//! parameters and, for chain scenarios, an optional `[chain]` table.

mod config;
mod report;
mod scenarios;
mod sweep;

use std::time::Instant;

pub use config::{ExperimentConfig, Module};
pub use report::{csv_table, Estimate, Relation, ReportBundle, Table, Verdict};
pub use scenarios::ScenarioInfo;
pub use sweep::seed_sweep;

use crate::error::{Error, Result};

/// Environment variable naming the default output directory of the CLI.
pub const OUT_ENV: &str = "TCBSDE_OUT";

/// Exit status for configuration and structural errors.
pub const EXIT_CONFIG: i32 = 2;

/// Every registered scenario in a fixed order.
pub fn list_scenarios() -> &'static [ScenarioInfo] {
    scenarios::REGISTRY
}

pub fn find_scenario(id: &str) -> Option<&'static ScenarioInfo> {
    scenarios::REGISTRY.iter().find(|s| s.id == id)
}

fn lookup(cfg: &ExperimentConfig) -> Result<&'static ScenarioInfo> {
    let info =
        find_scenario(&cfg.scenario).ok_or_else(|| Error::Config(format!("unknown scenario '{}'", cfg.scenario)))?;
    if let Some(m) = cfg.module {
        if m != info.module {
            return Err(Error::Config(format!(
                "scenario '{}' belongs to module {}, not {}",
                info.id,
                info.module.as_str(),
                m.as_str()
            )));
        }
    }
    Ok(info)
}

fn execute(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let info = lookup(cfg)?;
    let mut b = ReportBundle::new(info.id, info.module, info.anchor, cfg.seed, &cfg.source);
    let started = Instant::now();
    (info.run)(cfg, &mut b)?;
    b.runtime_secs = started.elapsed().as_secs_f64();
    Ok(b)
}

/// Runs the configured scenario and writes the bundle to `cfg.out` when set.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let b = execute(cfg)?;
    if let Some(out) = &cfg.out {
        b.write(out)?;
    }
    Ok(b)
}

/// Process exit status for a run outcome: 0 all pass, 1 a verdict failed,
/// 2 when the run produced no verdicts because of an error.
pub fn exit_code(outcome: &Result<ReportBundle>) -> i32 {
    match outcome {
        Ok(b) => b.exit_code(),
        Err(_) => EXIT_CONFIG,
    }
}
