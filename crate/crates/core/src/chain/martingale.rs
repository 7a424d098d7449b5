use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::model::{ChainPath, MarkovChainModel};
use crate::error::{precondition, structure, Result};
use crate::numerics::integrate_gl;
use crate::timechange::{Interp, SampledPath, TimeGrid};

const GL_NODES: usize = 8;

/// `int_a^b A_u e_x du`, exact for constant rates and Gauss-Legendre
/// otherwise.
fn drift(model: &MarkovChainModel, x: usize, a: f64, b: f64) -> DVector<f64> {
    if b <= a {
        return DVector::zeros(model.states());
    }
    if model.is_homogeneous() {
        return model.rates(a).column(x) * (b - a);
    }
    DVector::from_iterator(
        model.states(),
        (0..model.states()).map(|i| integrate_gl(|u| model.rates(u)[(i, x)], a, b, GL_NODES)),
    )
}

/// `M_t = X_t - X_0 - int_0^t A_u X_{u-} du` at a single time.
pub fn martingale_at(path: &ChainPath, model: &MarkovChainModel, t: f64) -> DVector<f64> {
    let n = model.states();
    let mut m = DVector::zeros(n);
    let mut left = 0.0;
    for (k, &x) in path.states.iter().enumerate() {
        let next = path.jump_times.get(k).copied().unwrap_or(f64::INFINITY);
        m -= drift(model, x, left, next.min(t));
        if next > t {
            m[x] += 1.0;
            break;
        }
        left = next;
    }
    m[path.states[0]] -= 1.0;
    m
}

/// The Doob-Meyer martingale of the indicator process, one component per
/// state, on the union of `grid` and the path's jump times. Values are
/// exact at the nodes; between nodes the drift is linear.
pub fn doob_meyer_martingale(path: &ChainPath, model: &MarkovChainModel, grid: &TimeGrid) -> Result<Vec<SampledPath>> {
    path.validate()?;
    if grid.horizon() > path.horizon * (1.0 + 1e-12) {
        return Err(structure("grid runs past the path horizon"));
    }
    let mut nodes: Vec<f64> = grid.nodes().to_vec();
    nodes.extend(path.jump_times.iter().copied().filter(|&t| t < grid.horizon()));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let merged = Arc::new(TimeGrid::from_nodes(nodes)?);
    let n = model.states();
    let mut cols = vec![Vec::with_capacity(merged.len()); n];
    for &t in merged.nodes() {
        let m = martingale_at(path, model, t);
        for i in 0..n {
            cols[i].push(m[i]);
        }
    }
    cols.into_iter()
        .map(|v| SampledPath::new(merged.clone(), v, Interp::Linear))
        .collect()
}

/// `psi = diag(A x) - A diag(x) - diag(x) A^T` for a coordinate vector `x`.
pub fn psi_matrix(a: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || x.len() != n {
        return Err(structure("A must be square and match x"));
    }
    let ones = x.iter().filter(|&&v| v == 1.0).count();
    if ones != 1 || x.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(precondition("x must be a unit coordinate vector"));
    }
    let xv = DVector::from_column_slice(x);
    let ax = a * &xv;
    let dx = DMatrix::from_diagonal(&xv);
    Ok(DMatrix::from_diagonal(&ax) - a * &dx - &dx * a.transpose())
}

/// `psi` at the coordinate vector `e_state`.
pub fn psi_at(a: &DMatrix<f64>, state: usize) -> Result<DMatrix<f64>> {
    let mut x = vec![0.0; a.nrows()];
    if state >= x.len() {
        return Err(precondition("state index out of range"));
    }
    x[state] = 1.0;
    psi_matrix(a, &x)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(psi: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(psi.clone()).eigenvalues.min()
}

/// `z^T psi z`.
pub fn semi_norm(z: &[f64], psi: &DMatrix<f64>) -> Result<f64> {
    if z.len() != psi.nrows() || !psi.is_square() {
        return Err(structure("z and psi sizes differ"));
    }
    let scale = psi.amax().max(1.0);
    if (psi - psi.transpose()).amax() > 1e-12 * scale {
        return Err(precondition("psi is not symmetric"));
    }
    let zv = DVector::from_column_slice(z);
    Ok((zv.transpose() * psi * &zv)[(0, 0)].max(0.0))
}
