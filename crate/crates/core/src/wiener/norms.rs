use super::problem::{BsdeInstance, DriverPoint, WienerBSDEProblem};
use super::{solve_lsmc, BrownianEnsemble};
use crate::error::{structure, Error, Result};
use crate::numerics::{Basis, Summary};
use crate::solution::SolutionEnsemble;
use crate::timechange::TimeChangeMap;

/// Monte Carlo estimates of the exponentially weighted norms of a solution.
#[derive(Debug, Clone)]
pub struct WeightedNormReport {
    pub rho: f64,
    /// `E[int_0^tau e^{rho phi} |alpha Y|^2 ds]`
    pub y_integral: Summary,
    /// `E[int_0^tau e^{rho phi} |Z|^2 ds]`
    pub z_integral: Summary,
    /// `E[sup_{t <= tau} e^{rho phi} |Y|^2]`
    pub y_sup: Summary,
    /// `[y_integral, z_integral, y_sup]` per path.
    pub per_path: Vec<[f64; 3]>,
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Left-point sums up to each path's stop node; `sol` lives on the clock's
/// source grid.
pub fn weighted_norms(sol: &SolutionEnsemble, clock: &TimeChangeMap, rho: f64) -> Result<WeightedNormReport> {
    let g = clock.source_grid();
    if !sol.grid.same_as(g) {
        return Err(structure("solution and clock live on different grids"));
    }
    let phi = clock.forward().path().values();
    let a2 = clock.density().values();
    let per_path: Vec<[f64; 3]> = (0..sol.paths())
        .map(|p| {
            let stop = sol.stop_index[p];
            let mut acc = [0.0; 3];
            for j in 0..stop {
                let w = (rho * phi[j]).exp() * g.step(j);
                acc[0] += w * a2[j] * sq(sol.y_at(p, j));
                acc[1] += w * sq(sol.z_at(p, j));
            }
            acc[2] = (0..=stop)
                .map(|j| (rho * phi[j]).exp() * sq(sol.y_at(p, j)))
                .fold(0.0, f64::max);
            acc
        })
        .collect();
    let col = |c: usize| Summary::of(&per_path.iter().map(|r| r[c]).collect::<Vec<_>>());
    Ok(WeightedNormReport {
        rho,
        y_integral: col(0),
        z_integral: col(1),
        y_sup: col(2),
        per_path,
    })
}

/// Both sides of the stability estimate for two problems on shared noise.
#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    pub theta: f64,
    pub beta: f64,
    pub delta: f64,
    /// `|dY(0)|^2`
    pub y0_term: f64,
    /// `E[int e^{theta phi} alpha^2 (|dY|^2 + |dZ|^2)]`
    pub solution_term: f64,
    /// `E|e^{theta phi(tau)/2} xi - e^{theta phi(tau')/2} xi'|^2`
    pub terminal_term: f64,
    /// `E[int e^{theta phi} |(f - f')(Y, Z) / alpha|^2]`
    pub driver_term: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Solves `a` and `b` by LSMC on the same noise and evaluates both sides of
/// the stability estimate with weight `e^{theta phi}`, where `phi` is the
/// clock of `a`. The driver difference is taken along the solution of `a`.
#[allow(clippy::too_many_arguments)]
pub fn stability_gap(
    a: &WienerBSDEProblem,
    b: &WienerBSDEProblem,
    w: &BrownianEnsemble,
    theta: f64,
    beta: f64,
    delta: f64,
    basis: Basis,
) -> Result<StabilityReport> {
    if !(theta > 3.0) {
        return Err(Error::Precondition(format!("theta must exceed 3, got {theta}")));
    }
    if a.k != b.k || a.d != b.d || !a.grid.same_as(&b.grid) {
        return Err(structure("problems differ in dimensions or grid"));
    }
    let ia = BsdeInstance::original(a, w)?;
    let ib = BsdeInstance::original(b, w)?;
    let sa = solve_lsmc(&ia, basis)?;
    let sb = solve_lsmc(&ib, basis)?;
    let g = &a.grid;
    let a2 = a.coeffs.alpha_sq.values();
    let mut phi = vec![0.0; g.len()];
    for j in 0..g.steps() {
        phi[j + 1] = phi[j] + a2[j] * g.step(j);
    }
    let k = a.k;
    let y0_term: f64 = (0..k).map(|i| (sa.mean_y(0, i) - sb.mean_y(0, i)).powi(2)).sum();
    let paths = w.paths();
    let mut sol_acc = 0.0;
    let mut term_acc = 0.0;
    let mut drv_acc = 0.0;
    let (mut fa, mut fb) = (vec![0.0; k], vec![0.0; k]);
    for p in 0..paths {
        let end = ia.stop_index[p].max(ib.stop_index[p]);
        for j in 0..end {
            let wt = (theta * phi[j]).exp() * g.step(j);
            let dy: f64 = sa
                .y_at(p, j)
                .iter()
                .zip(sb.y_at(p, j))
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            let dz: f64 = sa
                .z_at(p, j)
                .iter()
                .zip(sb.z_at(p, j))
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            sol_acc += wt * a2[j] * (dy + dz);
            let pt = DriverPoint {
                path: p,
                node: j,
                t: g.nodes()[j],
                state: ia.state_at(p, j),
            };
            (a.driver)(&pt, sa.y_at(p, j), sa.z_at(p, j), &mut fa);
            (b.driver)(&pt, sa.y_at(p, j), sa.z_at(p, j), &mut fb);
            let df: f64 = fa.iter().zip(&fb).map(|(x, y)| (x - y).powi(2)).sum();
            drv_acc += wt * df / a2[j];
        }
        let ea = (0.5 * theta * phi[ia.stop_index[p]]).exp();
        let eb = (0.5 * theta * phi[ib.stop_index[p]]).exp();
        term_acc += ia.terminal[p]
            .iter()
            .zip(&ib.terminal[p])
            .map(|(x, y)| (ea * x - eb * y).powi(2))
            .sum::<f64>();
    }
    let pf = paths as f64;
    let (solution_term, terminal_term, driver_term) = (sol_acc / pf, term_acc / pf, drv_acc / pf);
    Ok(StabilityReport {
        theta,
        beta,
        delta,
        y0_term,
        solution_term,
        terminal_term,
        driver_term,
        lhs: y0_term + beta * solution_term,
        rhs: terminal_term + driver_term / delta,
    })
}
