use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::super::config::ExperimentConfig;
use super::super::report::{csv_table, ReportBundle, Verdict};
use crate::error::Result;
use crate::numerics::Basis;
use crate::solution::SolutionEnsemble;
use crate::timechange::{
    build_phi_on_image, CoefficientProcesses, Direction, IncreasingProcess, Interp, SampledPath, TimeChangeMap,
    TimeGrid,
};
use crate::wiener::{
    bounded_solution_check, check_uniform_lipschitz, closed_form_linear, comparison_experiment, map_solution,
    simulate_brownian, solve_lsmc, solve_picard_oracle, stability_gap, transform_driver, BsdeInstance, DriverFn,
    DriverMode, DriverPoint, Payoff, ProbeBox, TerminalRule, WienerBSDEProblem,
};

fn grid(horizon: f64, steps: usize) -> Result<Arc<TimeGrid>> {
    Ok(Arc::new(TimeGrid::uniform(horizon, steps)?))
}

fn poly(coeffs: &[f64]) -> Payoff {
    Payoff::Polynomial {
        coord: 0,
        coeffs: coeffs.to_vec(),
    }
}

fn clock_for(p: &WienerBSDEProblem) -> Result<TimeChangeMap> {
    build_phi_on_image(&p.coeffs, &IncreasingProcess::identity(p.grid.clone()))
}

fn constant_linear(g: &Arc<TimeGrid>, r: f64, payoff: Payoff) -> Result<WienerBSDEProblem> {
    WienerBSDEProblem::linear(
        SampledPath::constant(g.clone(), r),
        SampledPath::constant(g.clone(), 0.0),
        payoff,
        1e-3,
    )
}

/// `r = 0.1 (1 + t)`, `u = 0.3` on `g`.
fn drifting_linear(g: &Arc<TimeGrid>, payoff: Payoff) -> Result<(SampledPath, SampledPath, WienerBSDEProblem)> {
    let r = SampledPath::from_fn(g.clone(), Interp::StepLeft, |t| 0.1 * (1.0 + t));
    let u = SampledPath::constant(g.clone(), 0.3);
    let p = WienerBSDEProblem::linear(r.clone(), u.clone(), payoff, 1e-3)?;
    Ok((r, u, p))
}

fn mean_paths(header: &[&str], sols: &[&SolutionEnsemble]) -> String {
    let nodes = sols[0].grid.nodes();
    let means: Vec<Vec<f64>> = sols.iter().map(|s| s.mean_path(0)).collect();
    csv_table(
        header,
        nodes
            .iter()
            .enumerate()
            .map(|(j, &t)| std::iter::once(t).chain(means.iter().map(|m| m[j])).collect()),
    )
}

/// `f = r(t) sin(y) + u(t) tanh(z)` with random oscillating `r`, `u`.
fn random_driver(g: &Arc<TimeGrid>, rng: &mut ChaCha8Rng) -> Result<WienerBSDEProblem> {
    let (ra, rw, rp) = (
        rng.random_range(5.0..=25.0),
        rng.random_range(1.0..=12.0),
        rng.random_range(0.0..=6.3),
    );
    let (ua, uw, up) = (
        rng.random_range(1.0..=5.0),
        rng.random_range(1.0..=12.0),
        rng.random_range(0.0..=6.3),
    );
    let r = SampledPath::from_fn(g.clone(), Interp::StepLeft, move |t| {
        ra * (0.5 + 0.5 * (rw * t + rp).sin())
    });
    let u = SampledPath::from_fn(g.clone(), Interp::StepLeft, move |t| {
        ua * (0.5 + 0.5 * (uw * t + up).cos())
    });
    let coeffs = CoefficientProcesses::lipschitz_floored(r.clone(), u.clone(), 1e-3)?;
    let driver: DriverFn = Arc::new(move |pt: &DriverPoint, y: &[f64], z: &[f64], o: &mut [f64]| {
        o[0] = r.eval_clamped(pt.t) * y[0].sin() + u.eval_clamped(pt.t) * z[0].tanh();
    });
    Ok(WienerBSDEProblem {
        k: 1,
        d: 1,
        grid: g.clone(),
        driver,
        coeffs,
        terminal: TerminalRule::Horizon,
        payoff: Payoff::Constant(vec![0.0]),
        mode: DriverMode::Lipschitz,
    })
}

pub(crate) fn uniform_lipschitz(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let drivers = cfg.param_usize("drivers", 5)?;
    let probes = cfg.param_usize("probes", 10_000)?;
    let g = grid(cfg.horizon_or(1.0), cfg.steps_or(200))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut worst_t, mut best_raw, mut max_alpha): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for i in 0..drivers {
        let p = random_driver(&g, &mut rng)?;
        let clock = clock_for(&p)?;
        let tp = transform_driver(&p, &clock)?;
        let bx = ProbeBox {
            horizon: g.horizon(),
            y: 2.0,
            z: 2.0,
        };
        let raw = check_uniform_lipschitz(&p.driver, 1, 1, probes, bx, cfg.seed + i as u64);
        let bt = ProbeBox {
            horizon: clock.target_horizon(),
            ..bx
        };
        let tr = check_uniform_lipschitz(&tp.driver, 1, 1, probes, bt, cfg.seed + 1000 + i as u64);
        let a = p.coeffs.alpha_sq.values().iter().copied().fold(0.0, f64::max);
        worst_t = worst_t.max(tr);
        best_raw = best_raw.max(raw);
        max_alpha = max_alpha.max(a);
        rows.push(vec![i as f64, a, raw, tr]);
    }
    b.verdict(Verdict::at_most(
        "transformed_lipschitz_max",
        worst_t,
        1.0 + cfg.tol_or(1e-6),
    ));
    b.verdict(Verdict::at_least("raw_lipschitz_max", best_raw, 1.5));
    b.verdict(Verdict::at_most("alpha_sq_max", max_alpha, 25.0));
    b.table(
        "lipschitz_ratios",
        csv_table(&["driver", "alpha_sq_max", "raw_ratio", "transformed_ratio"], rows),
    );
    Ok(())
}

pub(crate) fn linear_equivalence(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let g = grid(cfg.horizon_or(1.0), cfg.steps_or(50))?;
    let iterations = cfg.param_usize("iterations", 15)?;
    let w = simulate_brownian(g.clone(), cfg.paths_or(2000), 1, cfg.seed)?;
    let (_, _, p) = drifting_linear(&g, poly(&[1.0, 1.0]))?;
    let direct = solve_picard_oracle(&BsdeInstance::original(&p, &w)?, iterations, Basis::default())?;
    let clock = clock_for(&p)?;
    let tp = transform_driver(&p, &clock)?;
    let small = solve_picard_oracle(&tp.instance(&w)?, iterations, Basis::default())?;
    let back = map_solution(&small, &clock, Direction::Forward)?;
    let scale = direct.sup_abs_y();
    let gap = back
        .y
        .iter()
        .flatten()
        .zip(direct.y.iter().flatten())
        .map(|(a, c)| (a - c).abs())
        .fold(0.0, f64::max);
    b.verdict(Verdict::at_most("sup_gap_over_sup_y", gap / scale, cfg.tol_or(0.03)));
    let (y0, se) = direct.y0();
    b.estimate("y0_direct", y0, se);
    b.estimate("y0_transformed", back.y0().0, back.y0().1);
    b.table(
        "mean_paths",
        mean_paths(&["node_time", "Y_direct", "Y_transformed"], &[&direct, &back]),
    );
    Ok(())
}

pub(crate) fn lsmc_closed_form(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let tol = cfg.tol_or(0.05);
    let g = grid(cfg.horizon_or(1.0), cfg.steps_or(100))?;
    let pay = poly(&[1.0, 1.0, 1.0]);
    let (r, u, p) = drifting_linear(&g, pay.clone())?;
    let exact = closed_form_linear(&r, &u, &pay)?;
    let w_oracle = simulate_brownian(g.clone(), cfg.param_usize("oracle_paths", 2000)?, 1, cfg.seed + 1)?;
    let oracle = solve_picard_oracle(&BsdeInstance::original(&p, &w_oracle)?, 15, Basis::default())?;
    let w = simulate_brownian(g.clone(), cfg.paths_or(20_000), 1, cfg.seed)?;
    let sol = solve_lsmc(&BsdeInstance::original(&p, &w)?, Basis::default())?;
    let (y0, se) = sol.y0();
    b.verdict(Verdict::at_most(
        "closed_form_vs_picard_rel",
        ((oracle.y0().0 - exact) / exact).abs(),
        tol,
    ));
    b.verdict(Verdict::at_most(
        "lsmc_vs_closed_form_rel",
        ((y0 - exact) / exact).abs(),
        tol,
    ));
    b.estimate("y0_lsmc", y0, se);
    b.estimate("y0_picard", oracle.y0().0, oracle.y0().1);
    b.estimate("y0_closed_form", exact, 0.0);
    b.table("mean_path", mean_paths(&["node_time", "Y_lsmc"], &[&sol]));
    Ok(())
}

pub(crate) fn comparison(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let g = grid(cfg.horizon_or(1.0), cfg.steps_or(50))?;
    let w = simulate_brownian(g.clone(), cfg.paths_or(10_000), 1, cfg.seed)?;
    let call = constant_linear(
        &g,
        -0.1,
        Payoff::PositivePart {
            coord: 0,
            strike: 0.0,
            scale: 1.0,
        },
    )?;
    let zero = constant_linear(&g, -0.1, Payoff::Constant(vec![0.0]))?;
    let rep = comparison_experiment(&call, &zero, &w, Basis::Bins { count: 40 }, cfg.seed)?;
    b.verdict(Verdict::at_most("ordering_violations", rep.violations as f64, 0.0));
    b.estimate("y0_dominating", rep.a.y0().0, rep.a.y0().1);
    b.estimate("min_gap", rep.min_gap, 0.0);
    b.table(
        "mean_paths",
        mean_paths(&["node_time", "Y_dominating", "Y_dominated"], &[&rep.a, &rep.b]),
    );
    Ok(())
}

fn cubic(g: &Arc<TimeGrid>, payoff: Payoff) -> Result<WienerBSDEProblem> {
    let driver: DriverFn = Arc::new(|_: &DriverPoint, y: &[f64], _: &[f64], o: &mut [f64]| o[0] = -y[0].powi(3));
    Ok(WienerBSDEProblem {
        k: 1,
        d: 1,
        grid: g.clone(),
        driver,
        coeffs: CoefficientProcesses::unit_plus_z(SampledPath::constant(g.clone(), 0.0))?,
        terminal: TerminalRule::Horizon,
        payoff,
        mode: DriverMode::Monotone { l_prime: 0 },
    })
}

pub(crate) fn bounded_solution(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let g = grid(cfg.horizon_or(1.0), cfg.steps_or(100))?;
    let w = simulate_brownian(g.clone(), cfg.paths_or(5000), 1, cfg.seed)?;
    let rep = bounded_solution_check(
        &cubic(&g, Payoff::Sign { coord: 0 })?,
        &w,
        1.0,
        Basis::Bins { count: 40 },
        cfg.seed,
    )?;
    b.verdict(Verdict::at_most(
        "sup_abs_y",
        rep.sup_abs_y,
        rep.bound + cfg.tol_or(0.02),
    ));
    b.estimate("y0", rep.solution.y0().0, rep.solution.y0().1);
    b.table(
        "z_energy",
        csv_table(
            &["node_time", "mean_z_energy", "mean_y"],
            g.nodes()
                .iter()
                .enumerate()
                .map(|(j, &t)| vec![t, rep.z_energy[j], rep.solution.mean_y(j, 0)]),
        ),
    );
    Ok(())
}

pub(crate) fn stability(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let g = grid(cfg.horizon_or(1.0), cfg.steps_or(50))?;
    let w = simulate_brownian(g.clone(), cfg.paths_or(2000), 1, cfg.seed)?;
    let shift = cfg.param("shift", 0.1)?;
    let theta = cfg.param("theta", 3.5)?;
    let a = constant_linear(&g, 0.2, poly(&[0.0, 1.0]))?;
    let c = constant_linear(&g, 0.2, poly(&[shift, 1.0]))?;
    let rep = stability_gap(&a, &c, &w, theta, 0.1, 1.0, Basis::default())?;
    b.verdict(Verdict::at_most("lhs_over_rhs", rep.lhs / rep.rhs, 1.0));
    b.estimate("lhs", rep.lhs, 0.0);
    b.estimate("rhs", rep.rhs, 0.0);
    b.table(
        "terms",
        csv_table(
            &["y0_term", "solution_term", "terminal_term", "driver_term", "lhs", "rhs"],
            [vec![
                rep.y0_term,
                rep.solution_term,
                rep.terminal_term,
                rep.driver_term,
                rep.lhs,
                rep.rhs,
            ]],
        ),
    );
    Ok(())
}
