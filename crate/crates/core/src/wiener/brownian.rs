use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{structure, Result};
use crate::timechange::{TimeChangeMap, TimeGrid};

/// `P` paths of a `d`-dimensional Brownian motion on a grid, stored as
/// increments and cumulative levels.
#[derive(Debug, Clone)]
pub struct BrownianEnsemble {
    grid: Arc<TimeGrid>,
    d: usize,
    seed: u64,
    /// `increments[p][j * d + c]` over step `j`
    increments: Vec<Vec<f64>>,
    /// `levels[p][j * d + c]` at node `j`
    levels: Vec<Vec<f64>>,
}

fn cumulate(incs: &[f64], d: usize) -> Vec<f64> {
    let mut lv = vec![0.0; incs.len() + d];
    for j in 0..incs.len() / d {
        for c in 0..d {
            lv[(j + 1) * d + c] = lv[j * d + c] + incs[j * d + c];
        }
    }
    lv
}

impl BrownianEnsemble {
    /// Builds an ensemble from given increments.
    pub fn from_increments(grid: Arc<TimeGrid>, d: usize, seed: u64, increments: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || increments.is_empty() {
            return Err(structure("need d >= 1 and at least one path"));
        }
        if increments.iter().any(|r| r.len() != grid.steps() * d) {
            return Err(structure("increment rows do not match grid steps * d"));
        }
        let levels = increments.par_iter().map(|r| cumulate(r, d)).collect();
        Ok(Self {
            grid,
            d,
            seed,
            increments,
            levels,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn paths(&self) -> usize {
        self.increments.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Increment of path `p` over step `j` (all `d` coordinates).
    pub fn increment(&self, p: usize, j: usize) -> &[f64] {
        &self.increments[p][j * self.d..(j + 1) * self.d]
    }

    /// Level of path `p` at node `j`.
    pub fn level(&self, p: usize, j: usize) -> &[f64] {
        &self.levels[p][j * self.d..(j + 1) * self.d]
    }

    /// Coordinate `c` of every path at an arbitrary time, linearly
    /// interpolated between nodes.
    pub fn levels_at(&self, t: f64, c: usize) -> Vec<f64> {
        let g = &self.grid;
        let i = g.cell(t);
        let w = ((t - g.nodes()[i]) / g.step(i)).clamp(0.0, 1.0);
        self.levels
            .iter()
            .map(|l| (1.0 - w) * l[i * self.d + c] + w * l[(i + 1) * self.d + c])
            .collect()
    }

    /// Sample mean and variance of coordinate `c` of the increment over step `j`.
    pub fn step_moments(&self, j: usize, c: usize) -> (f64, f64) {
        let x: Vec<f64> = (0..self.paths()).map(|p| self.increment(p, j)[c]).collect();
        let m = crate::numerics::mean(&x);
        let s = crate::numerics::std_dev(&x);
        (m, s * s)
    }
}

/// Gaussian increments with variance equal to the step. Path `p` draws from
/// its own ChaCha8 stream, so the result depends only on `seed`.
pub fn simulate_brownian(grid: Arc<TimeGrid>, paths: usize, d: usize, seed: u64) -> Result<BrownianEnsemble> {
    if paths == 0 || d == 0 {
        return Err(structure("need P >= 1 and d >= 1"));
    }
    let sd: Vec<f64> = (0..grid.steps()).map(|j| grid.step(j).sqrt()).collect();
    let increments = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut row = Vec::with_capacity(sd.len() * d);
            for s in &sd {
                for _ in 0..d {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    row.push(s * e);
                }
            }
            row
        })
        .collect();
    BrownianEnsemble::from_increments(grid, d, seed, increments)
}

/// Time-changed Brownian motion on the clock's target grid:
/// `dW~_j = D_j^{-1/2} (W(phi^{-1}(s_{j+1})) - W(phi^{-1}(s_j)))` with
/// `D = (phi^{-1})'` at the left node. Every `phi^{-1}(s_j)` must be a node
/// of the source grid.
pub fn transform_brownian(w: &BrownianEnsemble, clock: &TimeChangeMap) -> Result<BrownianEnsemble> {
    let src = w.grid();
    if !src.same_as(clock.source_grid()) {
        return Err(structure("Brownian grid differs from the clock's source grid"));
    }
    let target = clock.target_grid();
    let tol = 1e-9 * src.horizon().max(1.0);
    let mut idx = Vec::with_capacity(target.len());
    for (j, &t) in clock.inverse().values().iter().enumerate() {
        if !t.is_finite() || t > src.horizon() + tol {
            return Err(structure(format!(
                "clock target node {j} maps past the Brownian horizon"
            )));
        }
        let i = src.snap_up(t - tol).unwrap_or(src.steps());
        if (src.nodes()[i] - t).abs() > tol {
            return Err(structure(format!(
                "phi^-1 of target node {j} ({t}) is not a node of the Brownian grid"
            )));
        }
        idx.push(i);
    }
    let scale: Vec<f64> = clock.derivative().values().iter().map(|&dv| dv.powf(-0.5)).collect();
    let d = w.dim();
    let increments = w
        .levels
        .par_iter()
        .map(|lv| {
            let mut row = Vec::with_capacity((idx.len() - 1) * d);
            for j in 0..idx.len() - 1 {
                for c in 0..d {
                    row.push(scale[j] * (lv[idx[j + 1] * d + c] - lv[idx[j] * d + c]));
                }
            }
            row
        })
        .collect();
    BrownianEnsemble::from_increments(Arc::new(target.clone()), d, w.seed(), increments)
}
