use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::timechange::TimeGrid;

fn two_state(lambda: f64, mu: f64, start: usize) -> MarkovChainModel {
    let a = DMatrix::from_row_slice(2, 2, &[-lambda, mu, lambda, -mu]);
    MarkovChainModel::homogeneous(a, if start == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).unwrap()
}

fn three_state() -> MarkovChainModel {
    let entries = vec![
        (0, 1, RateProfile::Linear { a: 1.0, b: 0.5 }),
        (1, 0, RateProfile::Constant(0.7)),
        (1, 2, RateProfile::Constant(1.2)),
        (2, 0, RateProfile::Polynomial(vec![0.3, 0.0, 0.2])),
    ];
    MarkovChainModel::from_profiles(3, entries, vec![0.5, 0.3, 0.2], 2.0).unwrap()
}

#[test]
fn holding_times_are_unit_exponential() {
    let paths = simulate_chain(&two_state(1.0, 1.0, 0), 10.0, 10_000, 11).unwrap();
    // censored exponential: exposure over number of completed holds
    let jumps: usize = paths.iter().map(|p| p.jump_times.len()).sum();
    let m = 10.0 * paths.len() as f64 / jumps as f64;
    assert!((0.97..=1.03).contains(&m), "mean holding time {m}");
    assert!(paths.iter().all(|p| p.validate().is_ok()));
}

#[test]
fn absorbing_state_is_never_left() {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
    let m = MarkovChainModel::homogeneous(a, vec![0.0, 1.0]).unwrap();
    let paths = simulate_chain(&m, 50.0, 500, 3).unwrap();
    assert!(paths.iter().all(|p| p.jump_times.is_empty() && p.states == vec![1]));
}

#[test]
fn symmetric_chain_occupancy_is_uniform() {
    let p = 10_000;
    let paths = simulate_chain(&two_state(1.0, 1.0, 0), 10.0, p, 5).unwrap();
    let occ = occupancy(&paths, 2, 10.0);
    let tol = 3.0 / (p as f64).sqrt();
    assert!(occ.iter().all(|o| (o - 0.5).abs() <= tol), "{occ:?}");
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let m = three_state();
    assert_eq!(
        simulate_chain(&m, 2.0, 50, 9).unwrap(),
        simulate_chain(&m, 2.0, 50, 9).unwrap()
    );
}

#[test]
fn rate_above_declared_bound_is_an_invariant_error() {
    let rates: RateFn = Arc::new(|t| DMatrix::from_row_slice(2, 2, &[-(1.0 + t), 0.0, 1.0 + t, 0.0]));
    let m = MarkovChainModel::time_varying(2, rates, 2.0, vec![1.0, 0.0], &[0.0, 0.5]).unwrap();
    let err = simulate_chain(&m, 5.0, 200, 1).unwrap_err();
    assert!(matches!(err, Error::Invariant(_)));
}

#[test]
fn invalid_generators_are_rejected() {
    let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.5, -1.0]);
    assert!(matches!(validate_generator(&bad), Err(Error::Invariant(_))));
    let neg = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
    assert!(validate_generator(&neg).is_err());
}

#[test]
fn profile_integral_and_inverse() {
    let p = RateProfile::Linear { a: 1.0, b: 1.0 };
    assert!((p.integral(2.0) - 4.0).abs() < 1e-14);
    let s = p.invert_mass(0.0, 10.0, 4.0).unwrap();
    assert!((s - 2.0).abs() < 1e-12);
    assert!(p.invert_mass(0.0, 1.0, 4.0).is_none());
}

#[test]
fn killed_two_node_line_reaches_with_competing_exponentials() {
    let p = 20_000;
    let out = simulate_killed(
        &two_state(1.0, 0.0, 0),
        &[RateProfile::Constant(1.0), RateProfile::Constant(0.0)],
        &[1],
        30.0,
        p,
        2,
    )
    .unwrap();
    let hits: Vec<f64> = out
        .iter()
        .map(|o| matches!(o, KilledOutcome::Reached(_)) as u8 as f64)
        .collect();
    let s = crate::numerics::Summary::of(&hits);
    assert!(s.within(0.5, 3.0), "{s:?}");
}

#[test]
fn martingale_of_absorbed_path_is_zero() {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
    let m = MarkovChainModel::homogeneous(a, vec![0.0, 1.0]).unwrap();
    let path = ChainPath {
        jump_times: vec![],
        states: vec![1],
        horizon: 2.0,
    };
    let grid = TimeGrid::uniform(2.0, 8).unwrap();
    let mm = doob_meyer_martingale(&path, &m, &grid).unwrap();
    assert!(mm.iter().all(|c| c.values().iter().all(|&v| v == 0.0)));
}

#[test]
fn forced_jump_moves_martingale_by_unit_difference() {
    // oracle: M_1 = e_1 - e_0 - A e_0 * 0.5 - A e_1 * 0.5
    let (l, mu) = (2.0, 3.0);
    let m = two_state(l, mu, 0);
    let path = ChainPath {
        jump_times: vec![0.5],
        states: vec![0, 1],
        horizon: 1.0,
    };
    let m1 = martingale_at(&path, &m, 1.0);
    let want = [-1.0 - (-l * 0.5 + mu * 0.5), 1.0 - (l * 0.5 - mu * 0.5)];
    assert!((m1[0] - want[0]).abs() < 1e-14 && (m1[1] - want[1]).abs() < 1e-14);
    let before = martingale_at(&path, &m, 0.5 - 1e-9);
    let at = martingale_at(&path, &m, 0.5);
    assert!(((at[1] - before[1]) - 1.0).abs() < 1e-6 && ((at[0] - before[0]) + 1.0).abs() < 1e-6);
    let grid = TimeGrid::uniform(1.0, 4).unwrap();
    let mm = doob_meyer_martingale(&path, &m, &grid).unwrap();
    assert!((mm[1].last() - want[1]).abs() < 1e-14);
}

#[test]
fn martingale_ensemble_mean_vanishes() {
    let m = three_state();
    let p = 10_000;
    let paths = simulate_chain(&m, 1.0, p, 21).unwrap();
    for i in 0..3 {
        let xs: Vec<f64> = paths.iter().map(|q| martingale_at(q, &m, 1.0)[i]).collect();
        let s = crate::numerics::Summary::of(&xs);
        assert!(s.within(0.0, 3.0), "coordinate {i}: {s:?}");
    }
}

#[test]
fn psi_of_two_state_chain() {
    let (l, mu) = (1.5, 0.4);
    let a = DMatrix::from_row_slice(2, 2, &[-l, mu, l, -mu]);
    let psi = psi_matrix(&a, &[1.0, 0.0]).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[l, -l, -l, l]);
    assert!((&psi - &want).amax() < 1e-15);
    let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(psi.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    assert!(eig[0].abs() < 1e-12 && (eig[1] - 2.0 * l).abs() < 1e-12);
    assert!(semi_norm(&[1.0, 1.0], &psi).unwrap().abs() < 1e-15);
    assert!((semi_norm(&[1.0, 0.0], &psi).unwrap() - l).abs() < 1e-15);
    assert_eq!(semi_norm(&[0.0, 0.0], &psi).unwrap(), 0.0);
}

#[test]
fn psi_preconditions() {
    let a = DMatrix::zeros(3, 3);
    assert_eq!(psi_matrix(&a, &[0.0, 1.0, 0.0]).unwrap(), DMatrix::zeros(3, 3));
    assert!(matches!(psi_matrix(&a, &[0.5, 0.5, 0.0]), Err(Error::Precondition(_))));
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
    assert!(matches!(semi_norm(&[1.0, 0.0], &asym), Err(Error::Precondition(_))));
}

fn generator(n: usize, off: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                a[(i, j)] = off[k];
                a[(j, j)] -= off[k];
                k += 1;
            }
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn psi_is_symmetric_psd(n in 2usize..6, off in prop::collection::vec(0.0f64..5.0, 30), x in 0usize..6, shift in -3.0f64..3.0) {
        let a = generator(n, &off);
        let psi = psi_at(&a, x % n).unwrap();
        prop_assert!((&psi - psi.transpose()).amax() <= 1e-12);
        prop_assert!(min_eigenvalue(&psi) >= -1e-12);
        let z: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let zs: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let (q, qs) = (semi_norm(&z, &psi).unwrap(), semi_norm(&zs, &psi).unwrap());
        prop_assert!((q - qs).abs() <= 1e-9 * (1.0 + q));
    }

    #[test]
    fn transformed_chain_keeps_generator_shape(c in 1.0f64..6.0, slope in 0.0f64..3.0, s in 0.0f64..10.0) {
        let m = three_state();
        let d = GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0))
            .with_y_coefficient(Arc::new(move |t| c + slope * t));
        let clock = chain_clock(&d, 2.0, 64).unwrap();
        let mt = transform_chain(&m, &clock).unwrap();
        prop_assert!(mt.bound() <= m.bound() * (1.0 + 1e-12));
        prop_assert!(validate_generator(&mt.rates(s)).is_ok());
    }
}

fn half_eta_driver(m: &MarkovChainModel) -> GammaBalancedDriver {
    GammaBalancedDriver::secant_family(
        m,
        0.5,
        Arc::new(|_, _, _, _| 0.0),
        Arc::new(|w| -0.5 * w),
        Arc::new(|_| -0.5),
    )
    .unwrap()
}

#[test]
fn compensator_eta_is_balanced_with_unit_ratio() {
    let m = three_state();
    let d = GammaBalancedDriver::z_free(&m, Arc::new(|_, _, y, _| -y));
    let r = check_gamma_balanced(&d, &m, 500, 2.0, 1).unwrap();
    assert!(r.passes(), "{r:?}");
    assert_eq!((r.ratio_min, r.ratio_max), (1.0, 1.0));
}

#[test]
fn linear_half_eta_is_half_balanced() {
    let m = three_state();
    let r = check_gamma_balanced(&half_eta_driver(&m), &m, 500, 2.0, 2).unwrap();
    assert!(r.passes(), "{r:?}");
    assert!(r.ratio_min >= 0.5 - 1e-12 && r.ratio_max <= 2.0);
}

#[test]
fn eta_with_nonzero_sum_is_reported() {
    let m = three_state();
    let mut d = half_eta_driver(&m);
    let eta = d.eta.clone();
    d.eta = Arc::new(move |t, x, z, zp| {
        let mut v = eta(t, x, z, zp);
        v[0] += 1.0;
        v
    });
    let r = check_gamma_balanced(&d, &m, 200, 2.0, 3).unwrap();
    assert!(!r.passes());
    assert!((r.sum - 1.0).abs() < 1e-12, "{r:?}");
}

#[test]
fn nonlinear_secant_family_is_balanced() {
    let m = three_state();
    let d = GammaBalancedDriver::secant_family(
        &m,
        0.5,
        Arc::new(|_, _, y, _| -y),
        Arc::new(|w| 0.3 * w.sin()),
        Arc::new(|w| 0.3 * w.cos()),
    )
    .unwrap();
    let r = check_gamma_balanced(&d, &m, 2000, 2.0, 4).unwrap();
    assert!(r.passes(), "{r:?}");
}

fn constant_clock(alpha: f64, horizon: f64) -> crate::timechange::TimeChangeMap {
    let d = GammaBalancedDriver::z_free(&two_state(1.0, 1.0, 0), Arc::new(|_, _, _, _| 0.0))
        .with_constants(0.0, alpha, 0.0);
    chain_clock(&d, horizon, 100).unwrap()
}

#[test]
fn chain_transform_under_identity_and_constant_clocks() {
    let m = three_state();
    let id = constant_clock(1.0, 2.0);
    let same = transform_chain(&m, &id).unwrap();
    for s in [0.0, 0.7, 1.9] {
        assert!((same.rates(s) - m.rates(s)).amax() < 1e-12);
    }
    let half = transform_chain(&m, &constant_clock(2.0, 2.0)).unwrap();
    for u in [0.1, 1.0, 3.5] {
        assert!((half.rates(u) - m.rates(u / 2.0) / 2.0).amax() < 1e-12, "u = {u}");
    }
    assert!((half.bound() - m.bound() / 2.0).abs() < 1e-12);
}

#[test]
fn slow_clock_is_rejected() {
    use crate::timechange::{build_phi_on_image, CoefficientProcesses, IncreasingProcess, SampledPath};
    let g = Arc::new(TimeGrid::uniform(1.0, 10).unwrap());
    let z = SampledPath::constant(g.clone(), 0.0);
    let c = CoefficientProcesses::custom(z.clone(), z, SampledPath::constant(g.clone(), 0.5), 0.1).unwrap();
    let clock = build_phi_on_image(&c, &IncreasingProcess::identity(g)).unwrap();
    assert!(matches!(
        transform_chain(&three_state(), &clock),
        Err(Error::Invariant(_))
    ));
}

#[test]
fn transformed_driver_is_balanced_with_the_same_gamma() {
    let m = three_state();
    let d = GammaBalancedDriver::secant_family(
        &m,
        0.5,
        Arc::new(|t, _, y, _| -(1.0 + t) * y),
        Arc::new(|w| 0.3 * w.sin()),
        Arc::new(|w| 0.3 * w.cos()),
    )
    .unwrap()
    .with_y_coefficient(Arc::new(|t| 1.0 + t));
    let clock = chain_clock(&d, 2.0, 200).unwrap();
    let (mt, dt) = (
        transform_chain(&m, &clock).unwrap(),
        transform_chain_driver(&d, &clock).unwrap(),
    );
    let r = check_gamma_balanced(&dt, &mt, 2000, clock.target_horizon(), 5).unwrap();
    assert!(r.passes(), "{r:?}");
    assert_eq!(dt.gamma, d.gamma);
    for k in 0..=400 {
        let s = clock.target_horizon() * k as f64 / 400.0;
        assert!((dt.c)(s) <= 1.0 + 1e-12, "C~({s}) = {}", (dt.c)(s));
    }
}

#[test]
fn constant_y_coefficient_four_is_scaled_to_one() {
    let m = two_state(1.0, 1.0, 0);
    let d = GammaBalancedDriver::z_free(&m, Arc::new(|_, _, y, _| -4.0 * y))
        .with_y_coefficient(Arc::new(|_| 4.0))
        .with_constants(0.0, 1.0, 0.0);
    let clock = chain_clock(&d, 1.0, 10).unwrap();
    let dt = transform_chain_driver(&d, &clock).unwrap();
    assert!(((dt.c)(1.3) - 1.0).abs() < 1e-12);
    assert!(((dt.f)(1.3, 0, 1.0, &[0.0, 0.0]) + 1.0).abs() < 1e-12);
    let same = transform_chain_driver(&d, &constant_clock(1.0, 1.0)).unwrap();
    assert_eq!((same.f)(0.4, 1, 2.0, &[0.0, 1.0]), (d.f)(0.4, 1, 2.0, &[0.0, 1.0]));
}

#[test]
fn deterministic_clock_preserves_occupancy_law() {
    let m = three_state();
    let d = GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0)).with_y_coefficient(Arc::new(|t| 1.0 + 2.0 * t));
    let clock = chain_clock(&d, 2.0, 400).unwrap();
    let mt = transform_chain(&m, &clock).unwrap();
    let p = 10_000;
    let orig = simulate_chain(&m, 2.0, p, 31).unwrap();
    let changed = simulate_chain(&mt, clock.target_horizon(), p, 32).unwrap();
    let tol = 3.0 / (p as f64).sqrt();
    for s in [0.5, 1.5, 3.0] {
        let a = occupancy(&orig, 3, clock.phi_inv(s));
        let b = occupancy(&changed, 3, s);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() <= tol, "s = {s}, state {i}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn growth_normalization() {
    let m = two_state(1.0, 1.0, 0);
    assert!(matches!(
        growth_normalize(
            &GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0)),
            2,
            1.0,
            1.0,
            10
        ),
        Err(Error::Precondition(_))
    ));
    let (clock, dt) = growth_normalize(
        &GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0)),
        2,
        3.0,
        1.0,
        10,
    )
    .unwrap();
    assert!((clock.phi(0.5) - 1.5).abs() < 1e-12);
    assert_eq!((dt.f)(0.7, 0, 0.0, &[0.0, 0.0]), 0.0);

    // |f(t, 0, 0)| = 1 + t^b exactly
    let b = 0.5;
    let d =
        GammaBalancedDriver::z_free(&m, Arc::new(move |t, _, y, _| 1.0 + t.powf(b) - y)).with_constants(0.0, 1.0, b);
    for mm in [2.0, 10.0] {
        let (clock, dt) = growth_normalize(&d, 2, mm, 4.0, 400).unwrap();
        for k in 0..=100 {
            let s = clock.target_horizon() * k as f64 / 100.0;
            let got = (dt.f)(s, 0, 0.0, &[0.0, 0.0]).abs();
            let exact = (1.0 + clock.phi_inv(s).powf(b)) / (2.0 * mm);
            assert!((got - exact).abs() < 1e-12 * (1.0 + exact), "s = {s}");
            assert!(got <= (1.0 + s.powf(b)) / mm);
        }
    }
}

fn ode() -> ChainScheme {
    ChainScheme::MarkovOde {
        opts: crate::numerics::OdeOptions::default(),
        paths: None,
    }
}

fn leaky_three_state() -> MarkovChainModel {
    let entries = vec![
        (0, 1, RateProfile::Constant(1.0)),
        (1, 0, RateProfile::Constant(0.5)),
        (0, 2, RateProfile::Constant(0.5)),
        (1, 2, RateProfile::Constant(1.0)),
    ];
    MarkovChainModel::from_profiles(3, entries, vec![1.0, 0.0, 0.0], 10.0).unwrap()
}

fn problem(model: MarkovChainModel, driver: GammaBalancedDriver, g: f64) -> ChainBSDEProblem {
    ChainBSDEProblem {
        model,
        driver,
        hitting: vec![2],
        terminal: Arc::new(move |_, _| g),
        growth: (g.abs().max(1.0), 0.0),
        markovian: true,
    }
}

#[test]
fn zero_driver_keeps_a_constant_terminal_value() {
    let m = leaky_three_state();
    let p = problem(
        m.clone(),
        GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0)),
        2.5,
    );
    let grid = TimeGrid::uniform(60.0, 600).unwrap();
    let sol = solve_chain_bsde(&p, ode(), &grid).unwrap();
    // far from the truncation horizon the value is exactly c
    assert!(sol.values[..=200].iter().flatten().all(|v| (v - 2.5).abs() < 1e-8));
    assert!(sol.tail[0] < 1e-10 && sol.truncation_bound < 1e-9);
    let grid = TimeGrid::uniform(30.0, 300).unwrap();
    let pic = solve_chain_bsde(
        &p,
        ChainScheme::Picard {
            paths: 2000,
            iterations: 2,
            seed: 4,
        },
        &grid,
    )
    .unwrap();
    let hit = pic.tail[0] == 0.0;
    assert!(!hit || (pic.y0().0 - 2.5).abs() < 1e-12, "{:?}", pic.y0());
}

#[test]
fn picard_and_ode_agree_on_a_three_state_problem() {
    let m = leaky_three_state();
    let d = GammaBalancedDriver::secant_family(
        &m,
        0.5,
        Arc::new(|_, _, y, _| 0.2 - 0.5 * y),
        Arc::new(|w| 0.3 * w.sin()),
        Arc::new(|w| 0.3 * w.cos()),
    )
    .unwrap()
    .with_y_coefficient(Arc::new(|_| 0.5));
    let p = problem(m, d, 1.0);
    let grid = TimeGrid::uniform(8.0, 800).unwrap();
    let u = solve_chain_bsde(&p, ode(), &grid).unwrap().y0().0;
    let pic = solve_chain_bsde(
        &p,
        ChainScheme::Picard {
            paths: 20_000,
            iterations: 5,
            seed: 8,
        },
        &grid,
    )
    .unwrap();
    let (y, se) = pic.y0();
    assert!(
        (y - u).abs() <= 0.02 * u.abs().max(1.0),
        "picard {y} (se {se}) vs ode {u}"
    );
    let ens = pic.ensemble.as_ref().unwrap();
    assert!(!ens.diverged && ens.iterate_distances.len() >= 2);
}

#[test]
fn ode_scheme_rejects_path_dependent_drivers() {
    let m = leaky_three_state();
    let mut p = problem(
        m.clone(),
        GammaBalancedDriver::z_free(&m, Arc::new(|_, _, _, _| 0.0)),
        1.0,
    );
    p.markovian = false;
    let grid = TimeGrid::uniform(1.0, 10).unwrap();
    assert!(matches!(solve_chain_bsde(&p, ode(), &grid), Err(Error::Unsupported(_))));
    p.hitting.clear();
    assert!(solve_chain_bsde(&p, ode(), &grid).is_err());
}

#[test]
fn picard_guards_the_contraction_condition() {
    let m = leaky_three_state();
    let d = GammaBalancedDriver::z_free(&m, Arc::new(|_, _, y, _| -20.0 * y)).with_y_coefficient(Arc::new(|_| 20.0));
    let grid = TimeGrid::uniform(1.0, 10).unwrap();
    let err = solve_chain_bsde(
        &problem(m, d, 1.0),
        ChainScheme::Picard {
            paths: 10,
            iterations: 1,
            seed: 0,
        },
        &grid,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Contraction { step: 0, .. }));
}

fn line(lambda: f64) -> MarkovChainModel {
    two_state(lambda, 0.0, 0)
}

fn settings(paths: usize) -> MessageSettings {
    MessageSettings {
        t_max: 20.0,
        steps: 1000,
        paths,
        seed: 17,
        beta: 0.1,
    }
}

#[test]
fn lossless_message_always_arrives() {
    let entries = vec![
        (0, 1, RateProfile::Constant(1.0)),
        (1, 0, RateProfile::Constant(1.0)),
        (1, 2, RateProfile::Constant(0.5)),
    ];
    let g = MarkovChainModel::from_profiles(3, entries, vec![1.0, 0.0, 0.0], 40.0).unwrap();
    let rep = message_transmission(
        &g,
        &vec![RateProfile::Constant(0.0); 3],
        0,
        2,
        MessageSettings {
            t_max: 60.0,
            ..settings(2000)
        },
    )
    .unwrap();
    // no loss: reach probability plus truncated tail is one
    assert!(
        (rep.bsde_y0() + rep.bsde.tail[0] - 1.0).abs() < 1e-8,
        "{} {}",
        rep.bsde_y0(),
        rep.bsde.tail[0]
    );
    assert!(rep.bsde_y0() > 1.0 - 1e-5);
    assert_eq!(rep.monte_carlo.estimate, 1.0);
}

#[test]
fn constant_loss_gives_competing_exponentials() {
    // oracle: lambda / (lambda + rho) = 0.5
    let loss = [RateProfile::Constant(1.0), RateProfile::Constant(0.0)];
    let rep = message_transmission(&line(1.0), &loss, 0, 1, settings(20_000)).unwrap();
    assert!((rep.bsde_y0() - 0.5).abs() <= 0.02);
    assert!((rep.bsde_y0() - rep.direct_y0()).abs() < 1e-6);
    assert!(
        rep.monte_carlo.within(rep.bsde_y0(), 3.0),
        "{:?} vs {}",
        rep.monte_carlo,
        rep.bsde_y0()
    );
}

#[test]
fn growing_loss_matches_the_hazard_integral() {
    // oracle: int_0^inf exp(-2t - t^2/2) dt by quadrature
    let exact: f64 = (0..200)
        .map(|k| {
            let a = k as f64 * 0.1;
            crate::numerics::integrate_gl(|t| (-2.0 * t - 0.5 * t * t).exp(), a, a + 0.1, 8)
        })
        .sum();
    let loss = [RateProfile::Linear { a: 1.0, b: 1.0 }, RateProfile::Constant(0.0)];
    let rep = message_transmission(&line(1.0), &loss, 0, 1, settings(2000)).unwrap();
    assert!((rep.direct_y0() - exact).abs() < 1e-6, "{} vs {exact}", rep.direct_y0());
    assert!((rep.bsde_y0() - exact).abs() < 1e-4, "{} vs {exact}", rep.bsde_y0());
}

#[test]
fn message_rejects_unknown_target() {
    let loss = [RateProfile::Constant(1.0), RateProfile::Constant(0.0)];
    assert!(matches!(
        message_transmission(&line(1.0), &loss, 0, 5, settings(10)),
        Err(Error::Config(_))
    ));
}

#[test]
fn bounds_on_the_message_solution() {
    let loss = [RateProfile::Constant(1.0), RateProfile::Constant(0.0)];
    let rep = message_transmission(&line(1.0), &loss, 0, 1, settings(100)).unwrap();
    let d = &rep.problem.driver;
    let r42 = verify_bound(&rep.bsde, d, BoundVariant::Thm42, 0.02);
    let r44 = verify_bound(&rep.bsde, d, BoundVariant::Thm44, 0.02);
    let r41 = verify_bound(&rep.bsde, d, BoundVariant::Lemma41, 0.02);
    assert!(r42.pass && r44.pass && r41.pass);
    assert!((r44.sup_ratio - 2.0 * r42.sup_ratio).abs() < 1e-12);
    let k = validate_k_functions(&rep.problem, 4, 20.0, 200, 3).unwrap();
    assert!(k.passes(), "{k:?}");

    let mut zero = rep.bsde.clone();
    zero.values.iter_mut().flatten().for_each(|v| *v = 0.0);
    assert_eq!(verify_bound(&zero, d, BoundVariant::Thm42, 0.0).sup_ratio, 0.0);
}

#[test]
fn undersized_k1_fails_validation() {
    let loss = [RateProfile::Constant(1.0), RateProfile::Constant(0.0)];
    let mut rep = message_transmission(&line(1.0), &loss, 0, 1, settings(10)).unwrap();
    rep.problem.driver.k1 = Arc::new(|t| 1.0 + t);
    assert!(!validate_k_functions(&rep.problem, 1, 10.0, 100, 0).unwrap().passes());
}

#[test]
fn chain_config_round_trip() {
    let text = r#"
[chain]
states = 2
source = 0
target = 1
horizon = 10.0
rates = [ { from = 0, to = 1, kind = "constant", value = 1.0 } ]
loss = [ { state = 0, kind = "linear", a = 1.0, b = 1.0 } ]
"#;
    let c = ChainConfig::from_toml_str(text).unwrap();
    let m = c.model().unwrap();
    assert_eq!(m.rates(0.3), DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]));
    assert_eq!(c.loss_profiles().unwrap()[0], RateProfile::Linear { a: 1.0, b: 1.0 });
    assert_eq!(c.hitting_set().unwrap(), vec![1]);
    let bad = text.replace("\"constant\"", "\"cubic\"");
    assert!(matches!(ChainConfig::from_toml_str(&bad), Err(Error::Config(_))));
}
