use rayon::prelude::*;

use super::lsmc::{fallback_warning, frozen_start, node_regressions};
use super::problem::{BsdeInstance, DriverPoint};
use crate::error::Result;
use crate::numerics::Basis;
use crate::solution::{Scheme, SolutionEnsemble};

/// Picard iteration on realized full-path sums. With the driver frozen at
/// the previous iterate, `Y_j = E[xi + sum_{i >= j} f_i dt_i | F_j]` and
/// `Z_j = -E[(xi + sum_{i > j} f_i dt_i) dW_j | F_j] / dt_j`, starting from
/// `(Y, Z) = 0`. Sup-distances between successive iterates are recorded;
/// two consecutive increases set the divergence flag and stop the loop.
pub fn solve_picard_oracle(inst: &BsdeInstance, iterations: usize, basis: Basis) -> Result<SolutionEnsemble> {
    inst.check_contraction()?;
    let (k, d) = (inst.k, inst.d);
    let q = k * d;
    let n = inst.grid.steps();
    let regs = node_regressions(inst, basis);
    let mut sol = frozen_start(inst, Scheme::Picard);
    for _ in 0..iterations {
        // realized tails xi + sum_{i >= j} f_i dt_i, per path
        let tails: Vec<Vec<f64>> = (0..inst.paths())
            .into_par_iter()
            .map(|p| {
                let stop = inst.stop_index[p];
                let mut tail = vec![0.0; (n + 1) * k];
                for j in stop..=n {
                    tail[j * k..(j + 1) * k].copy_from_slice(&inst.terminal[p]);
                }
                let mut f = vec![0.0; k];
                for j in (0..stop).rev() {
                    let pt = DriverPoint {
                        path: p,
                        node: j,
                        t: inst.grid.nodes()[j],
                        state: inst.state_at(p, j),
                    };
                    (inst.driver)(&pt, sol.y_at(p, j), sol.z_at(p, j), &mut f);
                    let dt = inst.grid.step(j);
                    for i in 0..k {
                        tail[j * k + i] = tail[(j + 1) * k + i] + f[i] * dt;
                    }
                }
                tail
            })
            .collect();
        let mut next = frozen_start(inst, Scheme::Picard);
        for j in 0..n {
            let Some(nr) = &regs[j] else { continue };
            let dt = inst.grid.step(j);
            for i in 0..k {
                let now: Vec<f64> = nr.active.iter().map(|&p| tails[p][j * k + i]).collect();
                let fit = nr.reg.fit(&now);
                if i == 0 {
                    next.y_se[j] = nr.reg.standard_error(&fit);
                }
                for (a, &p) in nr.active.iter().enumerate() {
                    next.y[p][j * k + i] = fit.fitted[a];
                }
                for c in 0..d {
                    let prod: Vec<f64> = nr
                        .active
                        .iter()
                        .map(|&p| tails[p][(j + 1) * k + i] * inst.noise.increment(p, j)[c])
                        .collect();
                    let fz = nr.reg.fit(&prod);
                    for (a, &p) in nr.active.iter().enumerate() {
                        next.z[p][j * q + i * d + c] = -fz.fitted[a] / dt;
                    }
                }
            }
        }
        let dist = sol
            .y
            .iter()
            .zip(&next.y)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        next.iterate_distances = std::mem::take(&mut sol.iterate_distances);
        next.iterate_distances.push(dist);
        sol = next;
        let h = &sol.iterate_distances;
        if h.len() >= 3 && h[h.len() - 1] > h[h.len() - 2] && h[h.len() - 2] > h[h.len() - 3] {
            sol.diverged = true;
            break;
        }
        if dist == 0.0 {
            break;
        }
    }
    if let Some(w) = fallback_warning(&regs) {
        sol.warnings.push(w);
    }
    if sol.diverged {
        sol.warnings.push("Picard iterates diverged".into());
    }
    Ok(sol)
}
