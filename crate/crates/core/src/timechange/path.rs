use std::sync::Arc;

use super::grid::TimeGrid;
use crate::error::{invariant, structure, Error, Result};

/// Interpolation between grid nodes, fixed when a path is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Holds the left node's value on `[t_i, t_{i+1})` (cadlag step path).
    StepLeft,
    Linear,
}

/// One scalar realization on a grid. Vector-valued processes are carried
/// componentwise.
#[derive(Debug, Clone)]
pub struct SampledPath {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
    interp: Interp,
}

impl SampledPath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(structure(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, interp })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<TimeGrid>, interp: Interp, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self { grid, values, interp }
    }

    pub fn constant(grid: Arc<TimeGrid>, c: f64) -> Self {
        Self::from_fn(grid, Interp::StepLeft, |_| c)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at an arbitrary time inside `[0, horizon]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let h = self.grid.horizon();
        let slack = 1e-12 * h.max(1.0);
        if !(t >= -slack && t <= h + slack) {
            return Err(Error::OutOfRange {
                node: self.grid.len(),
                t,
            });
        }
        Ok(self.eval_clamped(t))
    }

    /// Like [`eval`](Self::eval) but clamps `t` into the grid range.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.grid.horizon() {
            return self.last();
        }
        let i = self.grid.cell(t);
        match self.interp {
            Interp::StepLeft => self.values[i],
            Interp::Linear => {
                let w = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
                self.values[i] + w * (self.values[i + 1] - self.values[i])
            }
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, interp: Interp) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self {
            grid: Arc::clone(&self.grid),
            values,
            interp,
        }
    }
}

/// A continuous non-decreasing process started at zero, e.g. `v` or `phi`.
#[derive(Debug, Clone)]
pub struct IncreasingProcess {
    path: SampledPath,
    floor: f64,
}

impl IncreasingProcess {
    /// `floor > 0` additionally demands increments of at least `floor * dt`.
    pub fn new(path: SampledPath, floor: f64) -> Result<Self> {
        if !(floor >= 0.0) {
            return Err(invariant(format!("negative strictness floor {floor}")));
        }
        let v = path.values();
        if v[0] != 0.0 {
            return Err(invariant(format!("increasing process must start at 0, got {}", v[0])));
        }
        let nodes = path.grid().nodes();
        for i in 0..v.len() - 1 {
            let inc = v[i + 1] - v[i];
            if !(inc >= 0.0) {
                return Err(invariant(format!(
                    "process decreases on step {i}: {} -> {}",
                    v[i],
                    v[i + 1]
                )));
            }
            let need = floor * (nodes[i + 1] - nodes[i]);
            if floor > 0.0 && inc < need * (1.0 - 1e-12) {
                return Err(invariant(format!(
                    "increment {inc} below floor {floor} * dt on step {i}"
                )));
            }
        }
        Ok(Self { path, floor })
    }

    /// `v_t = t` on the given grid.
    pub fn identity(grid: Arc<TimeGrid>) -> Self {
        let path = SampledPath::from_fn(grid, Interp::Linear, |t| t);
        Self { path, floor: 1.0 }
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn grid(&self) -> &TimeGrid {
        self.path.grid()
    }

    pub fn sup(&self) -> f64 {
        self.path.last()
    }
}

/// Left-point Stieltjes sums of `h` against an arbitrary integrator on a
/// shared grid. Output is the running integral, linearly interpolated.
pub(crate) fn stieltjes_sum(h: &SampledPath, x: &SampledPath) -> Result<SampledPath> {
    if !h.grid().same_as(x.grid()) {
        return Err(structure("integrand and integrator live on different grids"));
    }
    let (hv, xv) = (h.values(), x.values());
    let mut out = Vec::with_capacity(hv.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 0..hv.len() - 1 {
        acc += hv[i] * (xv[i + 1] - xv[i]);
        out.push(acc);
    }
    Ok(x.with_values(out, Interp::Linear))
}

/// Running integral `int_0^t h dv` by left-point Stieltjes quadrature.
pub fn integrate_stieltjes(h: &SampledPath, v: &IncreasingProcess) -> Result<SampledPath> {
    stieltjes_sum(h, v.path())
}
