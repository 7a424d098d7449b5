use std::sync::Arc;

use super::coeffs::CoefficientProcesses;
use super::grid::TimeGrid;
use super::path::{integrate_stieltjes, stieltjes_sum, IncreasingProcess, Interp, SampledPath};
use crate::error::{structure, Error, Result};

/// Which way a process is carried through a clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Original time to clock time: `X~(s) = X(phi^{-1}(s))`.
    Inverse,
    /// Clock time back to original time: `X(t) = X~(phi(t))`.
    Forward,
}

/// `inf { t : a(t) > s }` on a sampled non-decreasing path (`+inf` if empty).
fn right_inverse(a: &SampledPath, s: f64) -> f64 {
    let v = a.values();
    let nodes = a.grid().nodes();
    let j = v.partition_point(|&x| x <= s);
    if j == v.len() {
        return f64::INFINITY;
    }
    if j == 0 {
        return 0.0;
    }
    match a.interp() {
        Interp::StepLeft => nodes[j],
        Interp::Linear => {
            let w = (s - v[j - 1]) / (v[j] - v[j - 1]);
            nodes[j - 1] + w * (nodes[j] - nodes[j - 1])
        }
    }
}

/// Right-continuous generalized inverse `C(s) = inf { t : A(t) > s }`
/// evaluated on `target`. Levels at or above `sup A` map to `+inf`.
pub fn generalized_inverse(a: &IncreasingProcess, target: &TimeGrid) -> SampledPath {
    let values = target.nodes().iter().map(|&s| right_inverse(a.path(), s)).collect();
    SampledPath::new(Arc::new(target.clone()), values, Interp::Linear).expect("one value per node")
}

/// The clock `phi = int alpha^2 dv` together with its inverse and the
/// derivative of the inverse on a target grid.
#[derive(Debug, Clone)]
pub struct TimeChangeMap {
    forward: IncreasingProcess,
    density: SampledPath,
    integrator: IncreasingProcess,
    inverse: SampledPath,
    derivative: SampledPath,
}

impl TimeChangeMap {
    /// `phi(t) = t` on `grid`, with the same grid as target.
    pub fn identity(grid: Arc<TimeGrid>) -> Self {
        let v = IncreasingProcess::identity(grid.clone());
        let one = SampledPath::constant(grid.clone(), 1.0);
        Self::assemble(v.clone(), one, v, &grid)
    }

    pub(crate) fn from_parts(
        forward: IncreasingProcess,
        density: SampledPath,
        integrator: IncreasingProcess,
        target: &TimeGrid,
    ) -> Self {
        Self::assemble(forward, density, integrator, target)
    }

    fn assemble(
        forward: IncreasingProcess,
        density: SampledPath,
        integrator: IncreasingProcess,
        target: &TimeGrid,
    ) -> Self {
        let mut map = Self {
            forward,
            density,
            integrator,
            inverse: SampledPath::constant(Arc::new(target.clone()), 0.0),
            derivative: SampledPath::constant(Arc::new(target.clone()), 0.0),
        };
        let inv: Vec<f64> = target.nodes().iter().map(|&s| map.phi_inv(s)).collect();
        let der: Vec<f64> = target.nodes().iter().map(|&s| map.phi_inv_derivative(s)).collect();
        let tg = Arc::new(target.clone());
        map.inverse = SampledPath::new(tg.clone(), inv, Interp::Linear).expect("sized");
        map.derivative = SampledPath::new(tg, der, Interp::StepLeft).expect("sized");
        map
    }

    pub fn forward(&self) -> &IncreasingProcess {
        &self.forward
    }

    /// Sampled `alpha^2` on the source grid.
    pub fn density(&self) -> &SampledPath {
        &self.density
    }

    pub fn inverse(&self) -> &SampledPath {
        &self.inverse
    }

    pub fn derivative(&self) -> &SampledPath {
        &self.derivative
    }

    pub fn source_grid(&self) -> &TimeGrid {
        self.forward.grid()
    }

    pub fn target_grid(&self) -> &TimeGrid {
        self.inverse.grid()
    }

    pub fn source_horizon(&self) -> f64 {
        self.source_grid().horizon()
    }

    /// `phi(T)` for the source horizon `T`.
    pub fn target_horizon(&self) -> f64 {
        self.forward.sup()
    }

    fn last_slope(&self) -> f64 {
        let g = self.source_grid();
        let n = g.steps();
        let v = self.forward.path().values();
        (v[n] - v[n - 1]) / g.step(n - 1)
    }

    /// `phi(t)`; beyond the source horizon the last slope is continued.
    pub fn phi(&self, t: f64) -> f64 {
        let h = self.source_horizon();
        if t <= h {
            self.forward.path().eval_clamped(t)
        } else {
            self.target_horizon() + self.last_slope() * (t - h)
        }
    }

    /// `phi^{-1}(s)`: the right inverse below `phi(T)`, the left limit `T`
    /// exactly at `phi(T)`, and `+inf` above it.
    pub fn phi_inv(&self, s: f64) -> f64 {
        let sup = self.target_horizon();
        let slack = 1e-12 * sup.max(1.0);
        if s < sup - slack {
            right_inverse(self.forward.path(), s)
        } else if s <= sup + slack {
            // left limit; continuity of phi makes this phi^{-1}(phi(T)) = T
            let v = self.forward.path().values();
            let j = v.partition_point(|&x| x < s - slack);
            self.source_grid().nodes()[j.min(v.len() - 1)]
        } else {
            f64::INFINITY
        }
    }

    /// `phi^{-1}(s)` continued past `phi(T)` with the last slope.
    pub fn phi_inv_extended(&self, s: f64) -> f64 {
        let sup = self.target_horizon();
        if s <= sup {
            self.phi_inv(s)
        } else {
            self.source_horizon() + (s - sup) / self.last_slope()
        }
    }

    /// `(phi^{-1})'(s) = 1 / (alpha^2 v')` at `phi^{-1}(s)`, NaN where undefined.
    pub fn phi_inv_derivative(&self, s: f64) -> f64 {
        let t = self.phi_inv_extended(s);
        if !t.is_finite() {
            return f64::NAN;
        }
        let g = self.source_grid();
        let i = g.cell(t);
        let v = self.integrator.path().values();
        let dv = (v[i + 1] - v[i]) / g.step(i);
        let dens = match self.density.interp() {
            Interp::StepLeft => self.density.values()[i],
            Interp::Linear => self.density.eval_clamped(t),
        };
        1.0 / (dens * dv)
    }

    /// Grid whose nodes are `phi(t_i)` for the source nodes `t_i`.
    pub fn image_grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_nodes(self.forward.path().values().to_vec())
    }

    /// Same clock, with inverse and derivative resampled on another target.
    pub fn retarget(&self, target: &TimeGrid) -> Self {
        Self::assemble(
            self.forward.clone(),
            self.density.clone(),
            self.integrator.clone(),
            target,
        )
    }

    pub fn is_identity(&self) -> bool {
        self.forward
            .path()
            .values()
            .iter()
            .zip(self.source_grid().nodes())
            .all(|(a, b)| a == b)
    }
}

/// Builds `phi(t) = int_0^t alpha^2 dv` and samples its inverse on `target`.
pub fn build_phi(coeffs: &CoefficientProcesses, v: &IncreasingProcess, target: &TimeGrid) -> Result<TimeChangeMap> {
    if !coeffs.alpha_sq.grid().same_as(v.grid()) {
        return Err(structure("alpha^2 and the integrator live on different grids"));
    }
    if let Some((i, a)) = coeffs
        .alpha_sq
        .values()
        .iter()
        .enumerate()
        .find(|(_, &a)| !(a >= coeffs.eps))
    {
        return Err(Error::Invariant(format!(
            "alpha^2 = {a} below eps = {} at node {i}",
            coeffs.eps
        )));
    }
    let phi = integrate_stieltjes(&coeffs.alpha_sq, v)?;
    let forward = IncreasingProcess::new(phi, coeffs.eps * v.floor())?;
    Ok(TimeChangeMap::assemble(
        forward,
        coeffs.alpha_sq.clone(),
        v.clone(),
        target,
    ))
}

/// [`build_phi`] with the image of the source grid as target, so that
/// `phi^{-1}` maps target nodes exactly onto source nodes.
pub fn build_phi_on_image(coeffs: &CoefficientProcesses, v: &IncreasingProcess) -> Result<TimeChangeMap> {
    let probe = build_phi(coeffs, v, v.grid())?;
    let image = probe.image_grid()?;
    Ok(probe.retarget(&image))
}

/// Carries `x` through the clock, sampling on the clock's target grid
/// (`Inverse`) or its source grid (`Forward`).
pub fn time_change_path(x: &SampledPath, clock: &TimeChangeMap, direction: Direction) -> Result<SampledPath> {
    let h = x.grid().horizon();
    let slack = 1e-9 * h.max(1.0);
    let (grid, times): (&Arc<TimeGrid>, Vec<f64>) = match direction {
        Direction::Inverse => (clock.inverse.grid_arc(), clock.inverse.values().to_vec()),
        Direction::Forward => (clock.forward.path().grid_arc(), clock.forward.path().values().to_vec()),
    };
    let mut values = Vec::with_capacity(times.len());
    for (node, &t) in times.iter().enumerate() {
        if !t.is_finite() || t > h + slack || t < -slack {
            return Err(Error::OutOfRange { node, t });
        }
        values.push(x.eval_clamped(t));
    }
    SampledPath::new(grid.clone(), values, x.interp())
}

/// Max over target nodes of `| int_0^{C(t)} h dX - int_0^t h~ dX~ |`.
pub fn substitution_check(h: &SampledPath, x: &SampledPath, clock: &TimeChangeMap) -> Result<f64> {
    if !h.grid().same_as(x.grid()) || !x.grid().same_as(clock.source_grid()) {
        return Err(structure("h, X and the clock must share the source grid"));
    }
    let lhs_running = stieltjes_sum(h, x)?;
    let h_t = time_change_path(h, clock, Direction::Inverse)?;
    let x_t = time_change_path(x, clock, Direction::Inverse)?;
    let rhs = stieltjes_sum(&h_t, &x_t)?;
    let mut worst: f64 = 0.0;
    for (j, &c) in clock.inverse.values().iter().enumerate() {
        let lhs = lhs_running.eval_clamped(c);
        worst = worst.max((lhs - rhs.values()[j]).abs());
    }
    Ok(worst)
}

/// One clock per path, or a single clock shared by every path.
#[derive(Debug, Clone)]
pub struct ClockSet {
    maps: Vec<Arc<TimeChangeMap>>,
}

impl ClockSet {
    pub fn shared(map: TimeChangeMap) -> Self {
        Self {
            maps: vec![Arc::new(map)],
        }
    }

    pub fn per_path(maps: Vec<TimeChangeMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(structure("empty clock set"));
        }
        let tg = maps[0].target_grid().clone();
        let sg = maps[0].source_grid().clone();
        if maps
            .iter()
            .any(|m| !m.target_grid().same_as(&tg) || !m.source_grid().same_as(&sg))
        {
            return Err(structure("per-path clocks must share source and target grids"));
        }
        Ok(Self {
            maps: maps.into_iter().map(Arc::new).collect(),
        })
    }

    pub fn get(&self, path: usize) -> &TimeChangeMap {
        if self.maps.len() == 1 {
            &self.maps[0]
        } else {
            &self.maps[path]
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn is_shared(&self) -> bool {
        self.maps.len() == 1
    }

    pub fn source_grid(&self) -> &TimeGrid {
        self.maps[0].source_grid()
    }

    pub fn target_grid(&self) -> &TimeGrid {
        self.maps[0].target_grid()
    }
}
