use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{csv_table, ReportBundle, Verdict};
use super::{execute, lookup};
use crate::error::{precondition, Result};
use crate::numerics::std_dev;
use crate::solution::fmt12;

/// Runs the scenario once per seed (in parallel) and aggregates. Per-seed
/// errors count as failed runs. `min_pass_rate` in `[params]` defaults to
/// 0.9. Estimates carrying a standard error get a dispersion verdict:
/// their spread across seeds must be at most 3 times the mean per-run SE.
pub fn seed_sweep(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ReportBundle> {
    if seeds.len() < 2 {
        return Err(precondition("a sweep needs at least two seeds"));
    }
    cfg.validate()?;
    let info = lookup(cfg)?;
    let min_rate = cfg.param("min_pass_rate", 0.9)?;
    let started = std::time::Instant::now();
    let runs: Vec<Result<ReportBundle>> = seeds
        .par_iter()
        .map(|&s| {
            let mut c = cfg.clone().with_seed(s);
            c.out = None;
            execute(&c)
        })
        .collect();
    let mut agg = ReportBundle::new(info.id, info.module, info.anchor, cfg.seed, &cfg.source);
    let passed = runs.iter().filter(|r| r.as_ref().is_ok_and(|b| b.passed())).count();
    let rate = passed as f64 / seeds.len() as f64;
    agg.verdict(Verdict::at_least("pass_rate", rate, min_rate));

    let mut rows = Vec::new();
    for (s, r) in seeds.iter().zip(&runs) {
        match r {
            Ok(b) => rows.push(vec![*s as f64, if b.passed() { 1.0 } else { 0.0 }]),
            Err(e) => {
                rows.push(vec![*s as f64, 0.0]);
                agg.note(format!("seed {s}: error: {e}"));
            }
        }
    }
    agg.table("seeds", csv_table(&["seed", "pass"], rows));

    let ok: Vec<&ReportBundle> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    if let Some(first) = ok.first() {
        let mut est_rows = Vec::new();
        for (k, e) in first.estimates.iter().enumerate() {
            let vals: Vec<f64> = ok.iter().filter_map(|b| b.estimates.get(k)).map(|x| x.value).collect();
            let ses: Vec<f64> = ok.iter().filter_map(|b| b.estimates.get(k)).map(|x| x.se).collect();
            let mean_se = ses.iter().sum::<f64>() / ses.len() as f64;
            let spread = if vals.len() > 1 { std_dev(&vals) } else { 0.0 };
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            agg.estimate(e.name.clone(), mean, spread / (vals.len() as f64).sqrt());
            if mean_se > 0.0 && vals.len() > 1 {
                agg.verdict(Verdict::at_most(
                    format!("dispersion_{}", e.name),
                    spread,
                    3.0 * mean_se,
                ));
            }
            est_rows.push(format!(
                "{},{},{},{}\n",
                e.name,
                fmt12(mean),
                fmt12(spread),
                fmt12(mean_se)
            ));
        }
        if !est_rows.is_empty() {
            agg.table(
                "dispersion",
                format!("estimate,mean,sd_across_seeds,mean_se\n{}", est_rows.concat()),
            );
        }
    }
    agg.runtime_secs = started.elapsed().as_secs_f64();
    if let Some(out) = &cfg.out {
        agg.write(out)?;
    }
    Ok(agg)
}
