use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{BsdeInstance, DriverPoint, WienerBSDEProblem};
use super::transform::{transform_driver, ProbeBox};
use super::{map_solution, solve_lsmc, BrownianEnsemble};
use crate::error::{Error, Result};
use crate::numerics::Basis;
use crate::solution::SolutionEnsemble;
use crate::timechange::{build_phi_on_image, CoefficientProcesses, Direction, IncreasingProcess};

/// Ordering of two scalar solutions on shared noise.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// min over paths and nodes of `Y_A - Y_B`
    pub min_gap: f64,
    /// (path, node) pairs with `Y_A - Y_B < -3 SE`
    pub violations: usize,
    pub checked: usize,
    pub a: SolutionEnsemble,
    pub b: SolutionEnsemble,
}

impl ComparisonReport {
    pub fn violation_fraction(&self) -> f64 {
        self.violations as f64 / self.checked.max(1) as f64
    }
}

fn probe_driver_dominance(
    a: &WienerBSDEProblem,
    b: &WienerBSDEProblem,
    probes: usize,
    bx: ProbeBox,
    seed: u64,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = vec![0.0; a.d];
    let (mut fa, mut fb) = ([0.0], [0.0]);
    (0..probes).all(|_| {
        let t = rng.random_range(0.0..=bx.horizon);
        let y = [rng.random_range(-bx.y..=bx.y)];
        let z: Vec<f64> = (0..a.d).map(|_| rng.random_range(-bx.z..=bx.z)).collect();
        let pt = DriverPoint {
            path: 0,
            node: 0,
            t,
            state: &state,
        };
        (a.driver)(&pt, &y, &z, &mut fa);
        (b.driver)(&pt, &y, &z, &mut fb);
        fa[0] >= fb[0] - 1e-12
    })
}

/// Solves two scalar problems on the same noise and counts nodes where
/// `Y_A` falls below `Y_B` by more than three combined standard errors.
/// Requires `xi_A >= xi_B` on every path and `f_A >= f_B` on probes.
pub fn comparison_experiment(
    a: &WienerBSDEProblem,
    b: &WienerBSDEProblem,
    w: &BrownianEnsemble,
    basis: Basis,
    seed: u64,
) -> Result<ComparisonReport> {
    if a.k != 1 || b.k != 1 {
        return Err(Error::Unsupported("comparison is implemented for k = 1 only".into()));
    }
    let ia = BsdeInstance::original(a, w)?;
    let ib = BsdeInstance::original(b, w)?;
    if ia.terminal.iter().zip(&ib.terminal).any(|(x, y)| x[0] < y[0]) {
        return Err(Error::Precondition("xi_A < xi_B on some path".into()));
    }
    let bx = ProbeBox {
        horizon: a.grid.horizon(),
        y: 5.0,
        z: 5.0,
    };
    if !probe_driver_dominance(a, b, 2000, bx, seed) {
        return Err(Error::Precondition("f_A < f_B on some probe".into()));
    }
    let sa = solve_lsmc(&ia, basis)?;
    let sb = solve_lsmc(&ib, basis)?;
    let mut min_gap = f64::INFINITY;
    let mut violations = 0;
    let mut checked = 0;
    for j in 0..a.grid.len() {
        let tol = 3.0 * (sa.y_se[j].powi(2) + sb.y_se[j].powi(2)).sqrt();
        for p in 0..w.paths() {
            let gap = sa.y_at(p, j)[0] - sb.y_at(p, j)[0];
            min_gap = min_gap.min(gap);
            checked += 1;
            if gap < -tol {
                violations += 1;
            }
        }
    }
    Ok(ComparisonReport {
        min_gap,
        violations,
        checked,
        a: sa,
        b: sb,
    })
}

/// Outcome of the bounded-solution experiment.
#[derive(Debug, Clone)]
pub struct BoundedReport {
    pub sup_abs_y: f64,
    pub bound: f64,
    /// Mean of `int_0^{t ^ tau} |Z|^2 ds` at every node.
    pub z_energy: Vec<f64>,
    pub solution: SolutionEnsemble,
}

impl BoundedReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.sup_abs_y <= self.bound + tol
    }
}

/// Solves a scalar monotone-decreasing problem with `f(t, 0, 0) = 0` and
/// `|xi| <= bound` through the clock `alpha^2 = u^2 + 1` and reports
/// `sup |Y|` against the bound.
pub fn bounded_solution_check(
    problem: &WienerBSDEProblem,
    w: &BrownianEnsemble,
    bound: f64,
    basis: Basis,
    seed: u64,
) -> Result<BoundedReport> {
    if problem.k != 1 {
        return Err(Error::Precondition("bounded-solution check needs k = 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = vec![0.0; problem.d];
    let mut f1 = [0.0];
    let mut f2 = [0.0];
    for _ in 0..2000 {
        let t = rng.random_range(0.0..=problem.grid.horizon());
        let z: Vec<f64> = (0..problem.d).map(|_| rng.random_range(-3.0..=3.0)).collect();
        let zero_z = vec![0.0; problem.d];
        let pt = DriverPoint {
            path: 0,
            node: 0,
            t,
            state: &state,
        };
        (problem.driver)(&pt, &[0.0], &zero_z, &mut f1);
        if f1[0].abs() > 1e-12 {
            return Err(Error::Precondition(format!("f(t, 0, 0) = {} at t = {t}", f1[0])));
        }
        let (y1, y2) = (rng.random_range(-3.0..=3.0), rng.random_range(-3.0..=3.0));
        (problem.driver)(&pt, &[y1], &z, &mut f1);
        (problem.driver)(&pt, &[y2], &z, &mut f2);
        if (y1 - y2) * (f1[0] - f2[0]) > 1e-12 {
            return Err(Error::Precondition(format!("driver increases in y at t = {t}")));
        }
    }
    let coeffs = CoefficientProcesses::unit_plus_z(problem.coeffs.u.clone())?;
    let p = WienerBSDEProblem {
        coeffs,
        ..problem.clone()
    };
    let inst = BsdeInstance::original(&p, w)?;
    if let Some(x) = inst.terminal.iter().map(|x| x[0].abs()).find(|&x| x > bound) {
        return Err(Error::Precondition(format!("|xi| = {x} exceeds the bound {bound}")));
    }
    let v = IncreasingProcess::identity(p.grid.clone());
    let clock = build_phi_on_image(&p.coeffs, &v)?;
    let tp = transform_driver(&p, &clock)?;
    let ti = tp.instance(w)?;
    let small = solve_lsmc(&ti, basis)?;
    let sol = map_solution(&small, &clock, Direction::Forward)?;
    let g = &p.grid;
    let mut z_energy = vec![0.0; g.len()];
    for q in 0..sol.paths() {
        let mut acc = 0.0;
        for j in 0..g.steps() {
            if j < sol.stop_index[q] {
                acc += sol.z_at(q, j).iter().map(|z| z * z).sum::<f64>() * g.step(j);
            }
            z_energy[j + 1] += acc;
        }
    }
    for e in &mut z_energy {
        *e /= sol.paths() as f64;
    }
    Ok(BoundedReport {
        sup_abs_y: sol.sup_abs_y(),
        bound,
        z_energy,
        solution: sol,
    })
}
