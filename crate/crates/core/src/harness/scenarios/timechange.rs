use std::sync::Arc;

use super::super::config::ExperimentConfig;
use super::super::report::{csv_table, ReportBundle, Verdict};
use crate::error::Result;
use crate::numerics::std_dev;
use crate::timechange::{
    build_phi, build_phi_on_image, substitution_check, time_change_path, CoefficientProcesses, Direction,
    IncreasingProcess, Interp, SampledPath, TimeChangeMap, TimeGrid,
};
use crate::wiener::{simulate_brownian, transform_brownian};

/// Clock with density `alpha^2(t)` (step-left) and `v = t` on `[0, horizon]`,
/// targeted at its own image grid.
pub(crate) fn density_clock(horizon: f64, steps: usize, alpha_sq: impl Fn(f64) -> f64) -> Result<TimeChangeMap> {
    let g = Arc::new(TimeGrid::uniform(horizon, steps)?);
    let zero = SampledPath::constant(g.clone(), 0.0);
    let a = SampledPath::from_fn(g.clone(), Interp::StepLeft, alpha_sq);
    let c = CoefficientProcesses::custom(zero.clone(), zero, a, 1e-3)?;
    build_phi_on_image(&c, &IncreasingProcess::identity(g))
}

pub(crate) fn identity_roundtrip(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let g = Arc::new(TimeGrid::uniform(cfg.horizon_or(1.0), cfg.steps_or(1000))?);
    let clock = TimeChangeMap::identity(g.clone());
    let tol = cfg.tol_or(1e-12);
    let x = SampledPath::from_fn(g.clone(), Interp::Linear, |t| (3.0 * t).sin() + t);
    let there = time_change_path(&x, &clock, Direction::Inverse)?;
    let back = time_change_path(&there, &clock, Direction::Forward)?;
    let path_err = back
        .values()
        .iter()
        .zip(x.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let inv_err = g
        .nodes()
        .iter()
        .map(|&t| (clock.phi_inv(clock.phi(t)) - t).abs())
        .fold(0.0, f64::max);
    let der_err = clock
        .derivative()
        .values()
        .iter()
        .map(|d| (d - 1.0).abs())
        .fold(0.0, f64::max);
    b.verdict(Verdict::at_most("path_roundtrip_max_error", path_err, tol));
    b.verdict(Verdict::at_most("inverse_of_forward_max_error", inv_err, tol));
    b.verdict(Verdict::at_most("inverse_derivative_deviation", der_err, tol));
    b.table(
        "roundtrip",
        csv_table(
            &["node_time", "x", "x_roundtrip"],
            g.nodes()
                .iter()
                .zip(x.values().iter().zip(back.values()))
                .map(|(&t, (&a, &c))| vec![t, a, c]),
        ),
    );
    Ok(())
}

pub(crate) fn clock_inverse(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let steps = cfg.steps_or(1000);
    let horizon = cfg.horizon_or(1.0);
    let probes = cfg.param_usize("probes", 20)?.max(2);
    let clock = density_clock(horizon, steps, |s| 1.0 + 2.0 * s)?;
    let delta = horizon / steps as f64;
    let tol = cfg.tol_or(10.0 * delta);
    let end = clock.target_horizon();
    let mut rows = Vec::with_capacity(probes);
    let mut worst: f64 = 0.0;
    for k in 0..probes {
        let s = end * k as f64 / (probes - 1) as f64;
        let exact = (-1.0 + (1.0 + 4.0 * s).sqrt()) / 2.0;
        let got = clock.phi_inv(s);
        worst = worst.max((got - exact).abs());
        rows.push(vec![s, got, exact, (got - exact).abs()]);
    }
    b.verdict(Verdict::at_most("inverse_max_error", worst, tol));
    b.estimate("phi_at_horizon", end, 0.0);
    b.table(
        "inverse_probes",
        csv_table(&["s", "phi_inv", "exact", "abs_error"], rows),
    );
    Ok(())
}

pub(crate) fn brownian_variance(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let steps = cfg.steps_or(1000);
    let paths = cfg.paths_or(10_000);
    let band = cfg.tol_or(0.05);
    let clock = density_clock(1.0, steps, |s| 1.0 + 2.0 * s)?;
    let w = simulate_brownian(Arc::new(TimeGrid::uniform(1.0, steps)?), paths, 1, cfg.seed)?;
    let wt = transform_brownian(&w, &clock)?;
    let mut rows = Vec::new();
    let mut at_one = 0.0;
    for s in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let x = wt.levels_at(s, 0);
        let v = std_dev(&x).powi(2);
        if s == 1.0 {
            at_one = v;
        }
        rows.push(vec![s, v, s]);
    }
    b.verdict(Verdict::at_least("variance_at_one_lower", at_one, 1.0 - band));
    b.verdict(Verdict::at_most("variance_at_one_upper", at_one, 1.0 + band));
    // normal sample variance: se = v sqrt(2 / (P - 1))
    b.estimate("variance_at_one", at_one, at_one * (2.0 / (paths as f64 - 1.0)).sqrt());
    b.table(
        "variance_profile",
        csv_table(&["clock_time", "variance", "expected"], rows),
    );
    Ok(())
}

fn substitution_residual(steps: usize) -> Result<f64> {
    let g = Arc::new(TimeGrid::uniform(1.0, steps)?);
    let h = SampledPath::from_fn(g.clone(), Interp::Linear, |t| (2.0 * t).cos());
    let x = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t * t + t);
    let zero = SampledPath::constant(g.clone(), 0.0);
    let a = SampledPath::from_fn(g.clone(), Interp::StepLeft, |s| 1.0 + s);
    let c = CoefficientProcesses::custom(zero.clone(), zero, a, 1e-3)?;
    let probe = build_phi(&c, &IncreasingProcess::identity(g.clone()), &g)?;
    let clock = probe.retarget(&TimeGrid::uniform(probe.target_horizon(), steps)?);
    substitution_check(&h, &x, &clock)
}

pub(crate) fn substitution(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let steps = cfg.steps_or(2000);
    let coarse_steps = (steps / 4).max(1);
    let fine = substitution_residual(steps)?;
    let coarse = substitution_residual(coarse_steps)?;
    // first-order residual: 10 grid steps of slack
    b.verdict(Verdict::at_most("residual_fine", fine, cfg.tol_or(10.0 / steps as f64)));
    b.verdict(Verdict::at_most(
        "refinement_ratio",
        fine / coarse.max(f64::MIN_POSITIVE),
        0.5,
    ));
    b.table(
        "residuals",
        csv_table(
            &["steps", "residual"],
            [vec![coarse_steps as f64, coarse], vec![steps as f64, fine]],
        ),
    );
    Ok(())
}
