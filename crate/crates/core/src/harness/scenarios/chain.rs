use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::super::config::ExperimentConfig;
use super::super::report::{csv_table, ReportBundle, Verdict};
use crate::chain::{
    chain_clock, check_gamma_balanced, doob_meyer_martingale, growth_normalize, message_transmission, min_eigenvalue,
    occupancy, psi_at, psi_matrix, simulate_chain, solve_chain_bsde, transform_chain, transform_chain_driver,
    validate_k_functions, verify_bound, BoundVariant, ChainBSDEProblem, ChainScheme, GammaBalancedDriver,
    MarkovChainModel, MessageReport, MessageSettings, RateProfile,
};
use crate::error::{Error, Result};
use crate::numerics::{integrate_gl, mean_se, OdeOptions};
use crate::timechange::TimeGrid;

fn three_state() -> Result<MarkovChainModel> {
    let entries = vec![
        (0, 1, RateProfile::Linear { a: 1.0, b: 0.5 }),
        (1, 0, RateProfile::Constant(0.7)),
        (1, 2, RateProfile::Constant(1.2)),
        (2, 0, RateProfile::Polynomial(vec![0.3, 0.0, 0.2])),
    ];
    MarkovChainModel::from_profiles(3, entries, vec![0.5, 0.3, 0.2], 2.0)
}

fn line(lambda: f64) -> Result<MarkovChainModel> {
    let a = DMatrix::from_row_slice(2, 2, &[-lambda, 0.0, lambda, 0.0]);
    MarkovChainModel::homogeneous(a, vec![1.0, 0.0])
}

fn random_generator(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in (0..n).filter(|&i| i != j) {
            // a few exact zeros keep reducible generators in the sample
            let v = if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..5.0)
            };
            a[(i, j)] = v;
            a[(j, j)] -= v;
        }
    }
    a
}

pub(crate) fn psi_properties(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let count = cfg.param_usize("generators", 100)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut asym, mut min_eig, mut shift): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    let mut rows = Vec::with_capacity(count);
    for k in 0..count {
        let n = rng.random_range(2..=6);
        let a = random_generator(n, &mut rng);
        let mut worst = f64::INFINITY;
        for x in 0..n {
            let psi = psi_at(&a, x)?;
            asym = asym.max((&psi - psi.transpose()).amax());
            let e = min_eigenvalue(&psi);
            worst = worst.min(e);
            // constant shifts lie in the kernel of the form
            let ones = nalgebra::DVector::from_element(n, 1.0);
            shift = shift.max((&psi * ones).amax());
        }
        min_eig = min_eig.min(worst);
        rows.push(vec![k as f64, n as f64, worst]);
    }
    let lambda = cfg.param("lambda", 1.5)?;
    let mu = 0.4;
    let a = DMatrix::from_row_slice(2, 2, &[-lambda, mu, lambda, -mu]);
    let psi = psi_matrix(&a, &[1.0, 0.0])?;
    let want = DMatrix::from_row_slice(2, 2, &[lambda, -lambda, -lambda, lambda]);
    b.verdict(Verdict::at_most("asymmetry_max", asym, 0.0));
    b.verdict(Verdict::at_least("min_eigenvalue", min_eig, -1e-12));
    b.verdict(Verdict::at_most("constant_shift_image_max", shift, 1e-12));
    b.verdict(Verdict::at_most("two_state_example_error", (&psi - &want).amax(), 0.0));
    b.table(
        "min_eigenvalues",
        csv_table(&["generator", "states", "min_eigenvalue"], rows),
    );
    Ok(())
}

pub(crate) fn transform_law(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let m = three_state()?;
    let horizon = cfg.horizon_or(2.0);
    let paths = cfg.paths_or(10_000);
    let d = GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0)).with_y_coefficient(Arc::new(|t| 1.0 + 2.0 * t));
    let clock = chain_clock(&d, horizon, cfg.steps_or(400))?;
    let mt = transform_chain(&m, &clock)?;
    let orig = simulate_chain(&m, horizon, paths, cfg.seed)?;
    let changed = simulate_chain(&mt, clock.target_horizon(), paths, cfg.seed.wrapping_add(0x9e37_79b9))?;
    let end = clock.target_horizon();
    let mut gap: f64 = 0.0;
    let mut rows = Vec::new();
    for k in 1..=4 {
        let s = end * k as f64 / 4.0;
        let a = occupancy(&orig, 3, clock.phi_inv(s));
        let c = occupancy(&changed, 3, s);
        for i in 0..3 {
            gap = gap.max((a[i] - c[i]).abs());
            rows.push(vec![s, i as f64, a[i], c[i]]);
        }
    }
    b.verdict(Verdict::at_most(
        "occupancy_gap_max",
        gap,
        cfg.tol_or(3.0 / (paths as f64).sqrt()),
    ));
    b.estimate("transformed_rate_bound", mt.bound(), 0.0);
    b.table(
        "occupancy",
        csv_table(&["clock_time", "state", "original", "transformed"], rows),
    );
    Ok(())
}

fn settings(cfg: &ExperimentConfig, paths: usize) -> Result<MessageSettings> {
    Ok(MessageSettings {
        t_max: cfg.param("t_max", 20.0)?,
        steps: cfg.steps_or(2000),
        paths,
        seed: cfg.seed,
        beta: cfg.param("beta", 0.1)?,
    })
}

fn mc_verdict(b: &mut ReportBundle, name: &str, rep: &MessageReport) {
    let gap = (rep.monte_carlo.estimate - rep.bsde_y0()).abs();
    b.verdict(Verdict::at_most(name, gap, 3.0 * rep.monte_carlo.se));
}

fn value_table(rep: &MessageReport) -> String {
    let nodes = rep.bsde.grid.nodes();
    let stride = (nodes.len() / 200).max(1);
    csv_table(
        &["node_time", "Y_clock", "Y_direct"],
        (0..nodes.len()).step_by(stride).map(|j| {
            vec![
                nodes[j],
                rep.bsde.values[j][rep.source],
                rep.direct.values[j][rep.source],
            ]
        }),
    )
}

/// Hazard-integral reach probability of the line with loss `rho (1 + t)`.
fn growing_loss_oracle(lambda: f64, rho: f64) -> f64 {
    (0..400)
        .map(|k| {
            let a = k as f64 * 0.1;
            integrate_gl(
                |t| lambda * (-(lambda + rho) * t - 0.5 * rho * t * t).exp(),
                a,
                a + 0.1,
                8,
            )
        })
        .sum()
}

pub(crate) fn message(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let paths = cfg.paths_or(20_000);
    if let Some(c) = &cfg.chain {
        let target = c
            .target
            .ok_or_else(|| Error::Config("message transmission needs [chain] target".into()))?;
        let rep = message_transmission(
            &c.model()?,
            &c.loss_profiles()?,
            c.source.unwrap_or(0),
            target,
            settings(cfg, paths)?,
        )?;
        mc_verdict(b, "config_mc_gap", &rep);
        b.verdict(Verdict::at_most(
            "config_clock_vs_direct",
            (rep.bsde_y0() - rep.direct_y0()).abs(),
            1e-4,
        ));
        b.estimate("reach_probability", rep.bsde_y0(), 0.0);
        b.estimate("reach_probability_mc", rep.monte_carlo.estimate, rep.monte_carlo.se);
        b.table("values", value_table(&rep));
        return Ok(());
    }
    let lambda = cfg.param("lambda", 1.0)?;
    let rho = cfg.param("rho", 1.0)?;
    let g = line(lambda)?;
    let constant = [RateProfile::Constant(rho), RateProfile::Constant(0.0)];
    let rep = message_transmission(&g, &constant, 0, 1, settings(cfg, paths)?)?;
    let exact = lambda / (lambda + rho);
    b.verdict(Verdict::at_most(
        "constant_bsde_vs_exact",
        (rep.bsde_y0() - exact).abs(),
        cfg.tol_or(0.02),
    ));
    mc_verdict(b, "constant_mc_gap", &rep);
    b.estimate("constant_reach_mc", rep.monte_carlo.estimate, rep.monte_carlo.se);
    b.table("values_constant", value_table(&rep));

    let growing = [RateProfile::Linear { a: rho, b: rho }, RateProfile::Constant(0.0)];
    let rep = message_transmission(&g, &growing, 0, 1, settings(cfg, paths)?)?;
    let oracle = growing_loss_oracle(lambda, rho);
    mc_verdict(b, "growing_mc_gap", &rep);
    b.verdict(Verdict::at_most(
        "growing_bsde_vs_quadrature",
        (rep.bsde_y0() - oracle).abs(),
        1e-4,
    ));
    b.estimate("growing_reach_mc", rep.monte_carlo.estimate, rep.monte_carlo.se);
    b.estimate("growing_reach_quadrature", oracle, 0.0);
    b.table("values_growing", value_table(&rep));
    Ok(())
}

pub(crate) fn bounds(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let tol = cfg.tol_or(0.02);
    let loss = [
        RateProfile::Constant(cfg.param("rho", 1.0)?),
        RateProfile::Constant(0.0),
    ];
    let rep = message_transmission(
        &line(cfg.param("lambda", 1.0)?)?,
        &loss,
        0,
        1,
        settings(cfg, cfg.paths_or(1000))?,
    )?;
    let d = &rep.problem.driver;
    let r42 = verify_bound(&rep.bsde, d, BoundVariant::Thm42, tol);
    let r44 = verify_bound(&rep.bsde, d, BoundVariant::Thm44, tol);
    b.verdict(Verdict::at_most("two_k1_ratio", r42.sup_ratio, 1.0 + tol));
    b.verdict(Verdict::at_most("k1_ratio", r44.sup_ratio, 1.0 + tol));
    let k = validate_k_functions(&rep.problem, cfg.param_usize("k_members", 4)?, 20.0, 200, cfg.seed)?;
    b.verdict(Verdict::at_most("k1_terminal_ratio", k.terminal, 1.0));
    b.verdict(Verdict::at_most("k1_moment_ratio", k.moment, 1.0));
    b.verdict(Verdict::at_most("k2_nested_ratio", k.nested, 1.0));

    let mut rows = Vec::new();
    let mut factors = Vec::new();
    for m in [2.0, 10.0] {
        let (clock, dt) = growth_normalize(d, 2, m, 4.0, 400)?;
        let end = clock.target_horizon();
        let worst = (0..=100)
            .map(|i| {
                let s = end * i as f64 / 100.0;
                (0..2).map(|x| (dt.f)(s, x, 0.0, &[0.0, 0.0]).abs()).fold(0.0, f64::max) * m
                    / (1.0 + s.powf(d.beta_hat))
            })
            .fold(0.0, f64::max);
        let r = verify_bound(&rep.bsde, d, BoundVariant::Normalized(m), tol);
        let f = BoundVariant::Normalized(m).factor(d);
        b.verdict(Verdict::at_most(format!("normalized_growth_m{m}"), worst, 1.0));
        b.verdict(Verdict::at_most(
            format!("normalized_ratio_m{m}"),
            r.sup_ratio,
            1.0 + tol,
        ));
        factors.push(f);
        rows.push(vec![m, f, r.sup_ratio]);
    }
    b.verdict(Verdict::at_most(
        "factor_m10_over_m2",
        factors[1] / factors[0],
        1.0 - 1e-12,
    ));
    b.table("normalized_bounds", csv_table(&["m", "factor", "sup_ratio"], rows));
    b.estimate("reach_probability", rep.bsde_y0(), 0.0);
    Ok(())
}

pub(crate) fn gamma_balance(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let probes = cfg.param_usize("probes", 1000)?;
    let m = three_state()?;
    let drivers = [
        GammaBalancedDriver::secant_family(
            &m,
            0.5,
            Arc::new(|t, _, y, _| -(1.0 + t) * y),
            Arc::new(|w| 0.3 * w.sin()),
            Arc::new(|w| 0.3 * w.cos()),
        )?
        .with_y_coefficient(Arc::new(|t| 1.0 + t)),
        GammaBalancedDriver::z_free(&m, Arc::new(|t, _, y, _| -(2.0 + t.sin()) * y))
            .with_y_coefficient(Arc::new(|_| 3.0)),
        GammaBalancedDriver::secant_family(
            &m,
            0.25,
            Arc::new(|t, x, y, _| -(1.0 + t * t) * y + x as f64),
            Arc::new(|w| 0.7 * w.tanh()),
            Arc::new(|w| 0.7 / w.cosh().powi(2)),
        )?
        .with_y_coefficient(Arc::new(|t| 1.0 + t * t)),
    ];
    let mut rows = Vec::new();
    let (mut worst_in, mut worst_out, mut gamma_gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, d) in drivers.iter().enumerate() {
        let seed = cfg.seed.wrapping_mul(31).wrapping_add(i as u64);
        let input = check_gamma_balanced(d, &m, probes, 2.0, seed)?;
        let clock = chain_clock(d, 2.0, 200)?;
        let (mt, dt) = (transform_chain(&m, &clock)?, transform_chain_driver(d, &clock)?);
        let out = check_gamma_balanced(&dt, &mt, probes, clock.target_horizon(), seed + 1)?;
        let viol = |r: &crate::chain::GammaReport| r.identity.max(r.ratio).max(r.sum).max(r.shift);
        worst_in = worst_in.max(viol(&input));
        worst_out = worst_out.max(viol(&out));
        gamma_gap = gamma_gap.max((dt.gamma - d.gamma).abs());
        rows.push(vec![i as f64, d.gamma, out.ratio_min, out.ratio_max, viol(&out)]);
    }
    b.verdict(Verdict::at_most("input_violation_max", worst_in, 1e-9));
    b.verdict(Verdict::at_most("transformed_violation_max", worst_out, 1e-9));
    b.verdict(Verdict::at_most("gamma_change", gamma_gap, 0.0));
    b.table(
        "gamma_reports",
        csv_table(&["driver", "gamma", "ratio_min", "ratio_max", "violation"], rows),
    );
    Ok(())
}

fn leaky_three_state() -> Result<MarkovChainModel> {
    let entries = vec![
        (0, 1, RateProfile::Constant(1.0)),
        (1, 0, RateProfile::Constant(0.5)),
        (0, 2, RateProfile::Constant(0.5)),
        (1, 2, RateProfile::Constant(1.0)),
    ];
    MarkovChainModel::from_profiles(3, entries, vec![1.0, 0.0, 0.0], 10.0)
}

pub(crate) fn cross_scheme(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let m = leaky_three_state()?;
    let d = GammaBalancedDriver::secant_family(
        &m,
        0.5,
        Arc::new(|_, _, y, _| 0.2 - 0.5 * y),
        Arc::new(|w| 0.3 * w.sin()),
        Arc::new(|w| 0.3 * w.cos()),
    )?
    .with_y_coefficient(Arc::new(|_| 0.5));
    let p = ChainBSDEProblem {
        model: m,
        driver: d,
        hitting: vec![2],
        terminal: Arc::new(|_, _| 1.0),
        growth: (1.0, 0.0),
        markovian: true,
    };
    let grid = TimeGrid::uniform(cfg.horizon_or(8.0), cfg.steps_or(800))?;
    let ode = solve_chain_bsde(
        &p,
        ChainScheme::MarkovOde {
            opts: OdeOptions::default(),
            paths: None,
        },
        &grid,
    )?;
    let pic = solve_chain_bsde(
        &p,
        ChainScheme::Picard {
            paths: cfg.paths_or(20_000),
            iterations: 5,
            seed: cfg.seed,
        },
        &grid,
    )?;
    let (u, (y, se)) = (ode.y0().0, pic.y0());
    b.verdict(Verdict::at_most(
        "picard_vs_ode_rel",
        (y - u).abs() / u.abs().max(1.0),
        cfg.tol_or(0.02),
    ));
    b.estimate("y0_picard", y, se);
    b.estimate("y0_ode", u, 0.0);
    let nodes = grid.nodes();
    let stride = (nodes.len() / 200).max(1);
    b.table(
        "values",
        csv_table(
            &["node_time", "state", "Y_ode", "Y_picard"],
            (0..nodes.len()).step_by(stride).flat_map(|j| {
                let (o, q) = (&ode.values[j], &pic.values[j]);
                (0..2).map(move |x| vec![nodes[j], x as f64, o[x], q[x]])
            }),
        ),
    );
    Ok(())
}

pub(crate) fn martingale_mean(cfg: &ExperimentConfig, b: &mut ReportBundle) -> Result<()> {
    let m = three_state()?;
    let horizon = cfg.horizon_or(2.0);
    let grid = TimeGrid::uniform(horizon, cfg.steps_or(20))?;
    let paths = simulate_chain(&m, horizon, cfg.paths_or(4000), cfg.seed)?;
    let mart: Vec<Vec<crate::timechange::SampledPath>> = paths
        .iter()
        .map(|p| doob_meyer_martingale(p, &m, &grid))
        .collect::<Result<_>>()?;
    let last = grid.len() - 1;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 0..3 {
        let x: Vec<f64> = mart.iter().map(|c| c[i].values()[last]).collect();
        let (mean, se) = mean_se(&x);
        worst = worst.max(mean.abs() / se.max(f64::MIN_POSITIVE));
        rows.push(vec![i as f64, mean, se]);
        b.estimate(format!("martingale_mean_{i}"), mean, se);
    }
    b.verdict(Verdict::at_most("terminal_mean_over_se_max", worst, 3.0));
    b.table("terminal_means", csv_table(&["coordinate", "mean", "se"], rows));
    Ok(())
}
