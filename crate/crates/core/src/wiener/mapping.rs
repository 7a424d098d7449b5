use std::sync::Arc;

use crate::error::{structure, Result};
use crate::solution::SolutionEnsemble;
use crate::timechange::{Direction, TimeChangeMap, TimeGrid};

/// Position of `t` in `grid`: cell index and linear weight of the right node.
fn locate(grid: &TimeGrid, t: f64) -> (usize, f64) {
    let i = grid.cell(t);
    let w = ((t - grid.nodes()[i]) / grid.step(i)).clamp(0.0, 1.0);
    (i, w)
}

/// Carries a solution between original and clock time.
///
/// `Forward` takes `(y, z)` on the clock's target grid to
/// `Y_t = y_{phi(t)}`, `Z_t = z_{phi(t)} phi'(t)^{1/2}` on the source grid;
/// `Inverse` applies the reciprocal map. `Y` is interpolated linearly, `Z`
/// is held on cells.
pub fn map_solution(sol: &SolutionEnsemble, clock: &TimeChangeMap, direction: Direction) -> Result<SolutionEnsemble> {
    let (from, to): (&TimeGrid, &TimeGrid) = match direction {
        Direction::Forward => (clock.target_grid(), clock.source_grid()),
        Direction::Inverse => (clock.source_grid(), clock.target_grid()),
    };
    if !sol.grid.same_as(from) {
        return Err(structure("solution grid does not match the clock"));
    }
    let tol = 1e-9 * from.horizon().max(1.0);
    // position in the input grid and Z factor for every output node
    let mut plan = Vec::with_capacity(to.len());
    for (i, &t) in to.nodes().iter().enumerate() {
        let (src, zf) = match direction {
            Direction::Forward => (clock.phi(t), clock.phi_inv_derivative(clock.phi(t)).powf(-0.5)),
            Direction::Inverse => (clock.phi_inv(t), clock.phi_inv_derivative(t).sqrt()),
        };
        if !src.is_finite() || src > from.horizon() + tol {
            return Err(structure(format!("output node {i} maps outside the solution grid")));
        }
        let (c, w) = locate(from, src);
        plan.push((c, w, zf));
    }
    let (k, d) = (sol.k, sol.d);
    let q = k * d;
    let n_out = to.len();
    let mut out = SolutionEnsemble::zeros(Arc::new(to.clone()), k, d, sol.paths(), sol.scheme);
    out.seed = sol.seed;
    out.warnings = sol.warnings.clone();
    out.iterate_distances = sol.iterate_distances.clone();
    out.diverged = sol.diverged;
    for p in 0..sol.paths() {
        let stop_t = from.nodes()[sol.stop_index[p]];
        let mapped = match direction {
            Direction::Forward => clock.phi_inv(stop_t),
            Direction::Inverse => clock.phi(stop_t),
        };
        out.stop_index[p] = to.snap_up(mapped - tol).unwrap_or(n_out - 1);
        for (j, &(c, w, zf)) in plan.iter().enumerate() {
            for i in 0..k {
                let a = sol.y[p][c * k + i];
                let b = sol.y[p][(c + 1) * k + i];
                out.y[p][j * k + i] = if w == 0.0 {
                    a
                } else if w == 1.0 {
                    b
                } else {
                    a + w * (b - a)
                };
            }
            if j + 1 < n_out && j < out.stop_index[p] {
                let cz = if w == 1.0 { c + 1 } else { c };
                for m in 0..q {
                    out.z[p][j * q + m] = sol.z[p][cz * q + m] * zf;
                }
            }
        }
    }
    for (j, &(c, w, _)) in plan.iter().enumerate() {
        out.y_se[j] = if w == 1.0 { sol.y_se[c + 1] } else { sol.y_se[c] };
    }
    Ok(out)
}
