use rayon::prelude::*;

use super::problem::{BsdeInstance, DriverPoint};
use crate::error::Result;
use crate::numerics::{Basis, Regressor};
use crate::solution::{Scheme, SolutionEnsemble};

/// Active paths at node `j` and the regressor built on their states.
pub(crate) struct NodeRegression {
    pub active: Vec<usize>,
    pub reg: Regressor,
}

pub(crate) fn node_regressions(inst: &BsdeInstance, basis: Basis) -> Vec<Option<NodeRegression>> {
    (0..inst.grid.steps())
        .map(|j| {
            let active: Vec<usize> = (0..inst.paths()).filter(|&p| inst.stop_index[p] > j).collect();
            if active.is_empty() {
                return None;
            }
            let pts: Vec<Vec<f64>> = active.iter().map(|&p| inst.state_at(p, j).to_vec()).collect();
            Some(NodeRegression {
                reg: Regressor::new(basis, &pts),
                active,
            })
        })
        .collect()
}

pub(crate) fn fallback_warning(regs: &[Option<NodeRegression>]) -> Option<String> {
    let bad: Vec<usize> = regs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.as_ref().is_some_and(|r| r.reg.fell_back()))
        .map(|(j, _)| j)
        .collect();
    (!bad.is_empty()).then(|| {
        format!(
            "regression basis singular at {} node(s) (first {}); used the ensemble mean",
            bad.len(),
            bad[0]
        )
    })
}

/// Freezes every path at its payoff from its stop node onward.
pub(crate) fn frozen_start(inst: &BsdeInstance, scheme: Scheme) -> SolutionEnsemble {
    let mut sol = SolutionEnsemble::zeros(inst.grid.clone(), inst.k, inst.d, inst.paths(), scheme);
    sol.stop_index = inst.stop_index.clone();
    sol.seed = Some(inst.noise.seed());
    let k = inst.k;
    for p in 0..inst.paths() {
        for j in inst.stop_index[p]..inst.grid.len() {
            sol.y[p][j * k..(j + 1) * k].copy_from_slice(&inst.terminal[p]);
        }
    }
    sol
}

/// Explicit backward Euler with least-squares conditional expectations:
/// `Z_j = -E[Y_{j+1} dW_j | F_j] / dt_j`, `Y_j = E[Y_{j+1} | F_j] + f(t_j, E[Y_{j+1} | F_j], Z_j) dt_j`.
/// Regressions use only the paths not yet stopped at `j`. Node standard
/// errors come from the regression residuals; at node 0 the standard error
/// of the realized `xi + sum f dt` is used when larger.
pub fn solve_lsmc(inst: &BsdeInstance, basis: Basis) -> Result<SolutionEnsemble> {
    inst.check_contraction()?;
    let (k, d) = (inst.k, inst.d);
    let q = k * d;
    let regs = node_regressions(inst, basis);
    let mut sol = frozen_start(inst, Scheme::Lsmc);
    // realized xi + sum f dt along each path (first component)
    let mut cash: Vec<f64> = inst.terminal.iter().map(|x| x[0]).collect();
    for j in (0..inst.grid.steps()).rev() {
        let Some(nr) = &regs[j] else { continue };
        let dt = inst.grid.step(j);
        let t = inst.grid.nodes()[j];
        let m = nr.active.len();
        let mut yhat = vec![vec![0.0; k]; m];
        let mut zhat = vec![vec![0.0; q]; m];
        for i in 0..k {
            let next: Vec<f64> = nr.active.iter().map(|&p| sol.y[p][(j + 1) * k + i]).collect();
            let fit = nr.reg.fit(&next);
            if i == 0 {
                sol.y_se[j] = nr.reg.standard_error(&fit);
            }
            for (a, v) in fit.fitted.iter().enumerate() {
                yhat[a][i] = *v;
            }
            for c in 0..d {
                let prod: Vec<f64> = nr
                    .active
                    .iter()
                    .zip(&next)
                    .map(|(&p, y)| y * inst.noise.increment(p, j)[c])
                    .collect();
                let fz = nr.reg.fit(&prod);
                for (a, v) in fz.fitted.iter().enumerate() {
                    zhat[a][i * d + c] = -v / dt;
                }
            }
        }
        let driver = &inst.driver;
        let rows: Vec<Vec<f64>> = nr
            .active
            .par_iter()
            .enumerate()
            .map(|(a, &p)| {
                let pt = DriverPoint {
                    path: p,
                    node: j,
                    t,
                    state: inst.state_at(p, j),
                };
                let mut f = vec![0.0; k];
                driver(&pt, &yhat[a], &zhat[a], &mut f);
                let mut row: Vec<f64> = (0..k).map(|i| yhat[a][i] + f[i] * dt).collect();
                row.push(f[0] * dt);
                row
            })
            .collect();
        for (a, &p) in nr.active.iter().enumerate() {
            cash[p] += rows[a][k];
            sol.y[p][j * k..(j + 1) * k].copy_from_slice(&rows[a][..k]);
            sol.z[p][j * q..(j + 1) * q].copy_from_slice(&zhat[a]);
        }
    }
    // at the root the regression noise is dominated by the spread of the
    // realized cash flows, whose mean is the estimate
    let (_, se0) = crate::numerics::mean_se(&cash);
    sol.y_se[0] = sol.y_se[0].max(se0);
    if let Some(w) = fallback_warning(&regs) {
        sol.warnings.push(w);
    }
    if inst.truncated > 0 {
        sol.warnings
            .push(format!("{} path(s) truncated at the grid horizon", inst.truncated));
    }
    Ok(sol)
}
