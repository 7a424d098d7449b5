use std::sync::Arc;

use proptest::prelude::*;

use super::*;

fn grid(h: f64, n: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::uniform(h, n).unwrap())
}

fn custom_clock(h: f64, n: usize, alpha_sq: impl Fn(f64) -> f64, target: &TimeGrid) -> TimeChangeMap {
    let g = grid(h, n);
    let zero = SampledPath::constant(g.clone(), 0.0);
    let a = SampledPath::from_fn(g.clone(), Interp::StepLeft, alpha_sq);
    let c = CoefficientProcesses::custom(zero.clone(), zero, a, 1e-3).unwrap();
    build_phi(&c, &IncreasingProcess::identity(g), target).unwrap()
}

#[test]
fn identity_clock() {
    let g = grid(1.0, 10);
    let m = custom_clock(1.0, 10, |_| 1.0, &g);
    for (i, &t) in g.nodes().iter().enumerate() {
        assert!((m.forward().path().values()[i] - t).abs() < 1e-15);
        assert!((m.inverse().values()[i] - t).abs() < 1e-15);
        assert!((m.derivative().values()[i] - 1.0).abs() < 1e-15);
    }
}

#[test]
fn constant_four_clock() {
    // oracle: phi = 4t, phi^{-1}(s) = s/4, derivative 1/4
    let target = TimeGrid::uniform(4.0, 40).unwrap();
    let m = custom_clock(1.0, 100, |_| 4.0, &target);
    assert!((m.phi(0.3) - 1.2).abs() < 1e-12);
    for (j, &s) in target.nodes().iter().enumerate() {
        assert!((m.inverse().values()[j] - s / 4.0).abs() < 1e-12);
        assert!((m.derivative().values()[j] - 0.25).abs() < 1e-12);
    }
}

#[test]
fn affine_density_clock_matches_quadratic_formula() {
    // oracle: phi(t) = t + t^2, phi^{-1}(s) = (-1 + sqrt(1 + 4s)) / 2
    let target = TimeGrid::uniform(2.0, 200).unwrap();
    let m = custom_clock(1.2, 1200, |s| 1.0 + 2.0 * s, &target);
    let tol = 10.0 * 1e-3;
    for s in [0.0f64, 1.0, 2.0] {
        let exact = (-1.0 + (1.0 + 4.0 * s).sqrt()) / 2.0;
        assert!((m.phi_inv(s) - exact).abs() <= tol, "s = {s}");
    }
}

#[test]
fn floor_violation_in_build_phi() {
    let g = grid(1.0, 4);
    let zero = SampledPath::constant(g.clone(), 0.0);
    let a = SampledPath::constant(g.clone(), 1.0);
    let mut c = CoefficientProcesses::custom(zero.clone(), zero, a, 0.5).unwrap();
    c.alpha_sq = SampledPath::constant(g.clone(), 0.1);
    assert!(matches!(
        build_phi(&c, &IncreasingProcess::identity(g.clone()), &g),
        Err(crate::Error::Invariant(_))
    ));
}

#[test]
fn generalized_inverse_examples() {
    let g = grid(2.0, 20);
    let lin = IncreasingProcess::new(SampledPath::from_fn(g.clone(), Interp::Linear, |t| 2.0 * t), 0.0).unwrap();
    let target = TimeGrid::from_nodes(vec![0.0, 1.0]).unwrap();
    assert!((generalized_inverse(&lin, &target).values()[1] - 0.5).abs() < 1e-12);

    // floor(t) as a cadlag step path: first t with floor(t) > 0.5 is 1
    let steps = Arc::new(TimeGrid::from_nodes(vec![0.0, 1.0, 2.0, 3.0]).unwrap());
    let floor = IncreasingProcess::new(
        SampledPath::new(steps, vec![0.0, 1.0, 2.0, 3.0], Interp::StepLeft).unwrap(),
        0.0,
    )
    .unwrap();
    let t2 = TimeGrid::from_nodes(vec![0.0, 0.5]).unwrap();
    assert_eq!(generalized_inverse(&floor, &t2).values()[1], 1.0);

    let quad = IncreasingProcess::new(
        SampledPath::from_fn(grid(2.0, 2000), Interp::Linear, |t| t + t * t),
        0.0,
    )
    .unwrap();
    let t3 = TimeGrid::from_nodes(vec![0.0, 2.0]).unwrap();
    assert!((generalized_inverse(&quad, &t3).values()[1] - 1.0).abs() < 1e-6);
}

#[test]
fn generalized_inverse_overflow_is_infinite() {
    let g = grid(1.0, 10);
    let lin = IncreasingProcess::identity(g);
    let target = TimeGrid::from_nodes(vec![0.0, 1.0, 3.0]).unwrap();
    let c = generalized_inverse(&lin, &target);
    assert!(c.values()[1].is_infinite());
    assert!(c.values()[2].is_infinite());
}

#[test]
fn generalized_inverse_on_flat_stretch_takes_right_end() {
    let g = Arc::new(TimeGrid::from_nodes(vec![0.0, 1.0, 2.0, 3.0]).unwrap());
    let a = IncreasingProcess::new(
        SampledPath::new(g, vec![0.0, 1.0, 1.0, 2.0], Interp::Linear).unwrap(),
        0.0,
    )
    .unwrap();
    let t = TimeGrid::from_nodes(vec![0.0, 0.999, 1.0, 1.5]).unwrap();
    let c = generalized_inverse(&a, &t);
    assert!((c.values()[1] - 0.999).abs() < 1e-12);
    assert_eq!(c.values()[2], 2.0);
    assert_eq!(c.values()[3], 2.5);
}

#[test]
fn time_change_identity_and_composition() {
    let g = grid(2.0, 200);
    let x = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t * t);
    let id = TimeChangeMap::identity(g.clone());
    let same = time_change_path(&x, &id, Direction::Inverse).unwrap();
    assert_eq!(same.values(), x.values());

    // phi = 2t: X~(t) = (t/2)^2
    let target = TimeGrid::from_nodes(vec![0.0, 1.0, 2.0, 4.0]).unwrap();
    let m = custom_clock(2.0, 200, |_| 2.0, &target);
    let xt = time_change_path(&x, &m, Direction::Inverse).unwrap();
    for (j, &s) in target.nodes().iter().enumerate() {
        assert!((xt.values()[j] - s * s / 4.0).abs() < 1e-3);
    }
}

#[test]
fn time_change_out_of_range() {
    let x = SampledPath::constant(grid(0.5, 10), 1.0);
    let m = custom_clock(1.0, 10, |_| 1.0, &TimeGrid::uniform(1.0, 10).unwrap());
    let err = time_change_path(&x, &m, Direction::Inverse).unwrap_err();
    assert!(matches!(err, crate::Error::OutOfRange { node: 6, .. }));
}

#[test]
fn round_trip_through_strict_clock() {
    let m0 = custom_clock(1.0, 500, |s| 1.0 + 2.0 * s, &TimeGrid::uniform(1.0, 10).unwrap());
    let m = m0.retarget(&m0.image_grid().unwrap());
    let x = SampledPath::from_fn(grid(1.0, 500), Interp::Linear, |t| (3.0 * t).sin());
    let there = time_change_path(&x, &m, Direction::Inverse).unwrap();
    let back = time_change_path(&there, &m, Direction::Forward).unwrap();
    let tol = x.grid().default_tolerance();
    for (a, b) in back.values().iter().zip(x.values()) {
        assert!((a - b).abs() <= tol);
    }
}

#[test]
fn substitution_telescopes_for_unit_integrand() {
    let g = grid(1.0, 100);
    let h = SampledPath::constant(g.clone(), 1.0);
    let x = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t + 0.5 * (5.0 * t).sin().abs());
    let m = custom_clock(1.0, 100, |s| 1.0 + s * s, &TimeGrid::uniform(1.3, 37).unwrap());
    assert!(substitution_check(&h, &x, &m).unwrap() < 1e-12);
}

#[test]
fn substitution_linear_case() {
    // both sides equal t^2/8 in closed form
    let g = grid(1.0, 1000);
    let h = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t);
    let x = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t);
    let m = custom_clock(1.0, 1000, |_| 2.0, &TimeGrid::uniform(2.0, 1000).unwrap());
    assert!(substitution_check(&h, &x, &m).unwrap() <= 5e-3);
}

fn smooth_residual(n: usize) -> f64 {
    let g = grid(1.0, n);
    let h = SampledPath::from_fn(g.clone(), Interp::Linear, |t| (2.0 * t).cos());
    let x = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t * t + t);
    let m0 = custom_clock(1.0, n, |s| 1.0 + s, &TimeGrid::uniform(1.0, 2).unwrap());
    let m = m0.retarget(&TimeGrid::uniform(m0.target_horizon(), n).unwrap());
    substitution_check(&h, &x, &m).unwrap()
}

#[test]
fn substitution_residual_shrinks_under_refinement() {
    let coarse = smooth_residual(500);
    let fine = smooth_residual(2000);
    assert!(fine <= coarse, "{fine} > {coarse}");
    // first order: four times the nodes, roughly a quarter of the error
    assert!(fine <= 0.5 * coarse, "{fine} vs {coarse}");
}

#[test]
fn inverse_derivative_times_density_is_one() {
    let m0 = custom_clock(1.0, 400, |s| 1.0 + 3.0 * s * s, &TimeGrid::uniform(1.0, 10).unwrap());
    let m = m0.retarget(&TimeGrid::uniform(m0.target_horizon(), 333).unwrap());
    for (j, &s) in m.target_grid().nodes().iter().enumerate() {
        let t = m.inverse().values()[j];
        let a = m.density().eval_clamped(t);
        let prod = m.derivative().values()[j] * a;
        assert!((prod - 1.0).abs() < 1e-2, "node {j} s {s}: {prod}");
    }
}

proptest! {
    #[test]
    fn inverse_is_monotone_and_consistent(
        incs in prop::collection::vec(0.0f64..2.0, 5..40),
        levels in prop::collection::vec(0.0f64..1.0, 2..30),
    ) {
        let n = incs.len();
        let g = grid(1.0, n);
        let mut vals = vec![0.0];
        for d in &incs { vals.push(vals.last().unwrap() + d); }
        let sup = *vals.last().unwrap();
        let a = IncreasingProcess::new(
            SampledPath::new(g, vals, Interp::Linear).unwrap(), 0.0).unwrap();
        let mut ls: Vec<f64> = levels.iter().map(|l| l * sup * 1.2).collect();
        ls.push(0.0);
        ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ls.dedup();
        prop_assume!(ls.len() >= 2);
        let target = TimeGrid::from_nodes(ls.clone()).unwrap();
        let c = generalized_inverse(&a, &target);
        for w in c.values().windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        // A(C(s)) = s wherever C(s) is finite (A continuous)
        for (j, &s) in ls.iter().enumerate() {
            let t = c.values()[j];
            if t.is_finite() {
                prop_assert!((a.path().eval_clamped(t) - s).abs() < 1e-9 * sup.max(1.0));
            }
        }
    }

    #[test]
    fn terminal_clock_stays_below_one(tau in 0.0f64..1e6, frac in 0.0f64..=1.0) {
        // t/(1 + tau ^ t) exceeds one past tau, so only [0, tau] is checked
        let c = normalize_terminal_time(tau, 4).unwrap();
        let p = c.phi(frac * tau);
        prop_assert!((0.0..1.0).contains(&p));
    }

    #[test]
    fn phi_of_inverse_is_identity(a0 in 0.5f64..5.0, a1 in 0.0f64..5.0, frac in 0.0f64..1.0) {
        let m = custom_clock(1.0, 200, move |s| a0 + a1 * s, &TimeGrid::uniform(1.0, 4).unwrap());
        let s = frac * m.target_horizon();
        prop_assert!((m.phi(m.phi_inv(s)) - s).abs() < 1e-9);
        let t = frac;
        prop_assert!((m.phi_inv(m.phi(t)) - t).abs() < 1e-9);
    }
}
