use std::fmt;
use std::sync::Arc;

use super::brownian::BrownianEnsemble;
use crate::error::{structure, Result};
use crate::timechange::{CoefficientProcesses, SampledPath, TimeGrid};

/// Where a driver is evaluated.
#[derive(Debug, Clone, Copy)]
pub struct DriverPoint<'a> {
    pub path: usize,
    /// Node index in the grid being solved on.
    pub node: usize,
    pub t: f64,
    /// Brownian level `W_t` of the path (original time).
    pub state: &'a [f64],
}

/// `f(point, y, z, out)`: `y` has `k` entries, `z` is `k x d` row-major and
/// the result is written into `out` (`k` entries).
pub type DriverFn = Arc<dyn Fn(&DriverPoint, &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// `(stop time, stopped state) -> xi`.
pub type PayoffFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Terminal condition `xi` as a function of the stopped state.
#[derive(Clone)]
pub enum Payoff {
    /// The same value on every path.
    Constant(Vec<f64>),
    /// `sum_i c_i W^i` in coordinate `coord` (scalar solutions).
    Polynomial { coord: usize, coeffs: Vec<f64> },
    /// `scale * max(W - strike, 0)` in coordinate `coord`.
    PositivePart { coord: usize, strike: f64, scale: f64 },
    /// `sign(W)` in coordinate `coord`, with `sign(0) = 0`.
    Sign { coord: usize },
    /// Any function of `(stop time, stopped state)` returning `k` values.
    Custom(PayoffFn),
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payoff::Constant(c) => write!(f, "Constant({c:?})"),
            Payoff::Polynomial { coord, coeffs } => write!(f, "Polynomial(W{coord}, {coeffs:?})"),
            Payoff::PositivePart { coord, strike, scale } => {
                write!(f, "PositivePart(W{coord}, {strike}, {scale})")
            }
            Payoff::Sign { coord } => write!(f, "Sign(W{coord})"),
            Payoff::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Payoff {
    pub fn eval(&self, t: f64, state: &[f64]) -> Vec<f64> {
        match self {
            Payoff::Constant(c) => c.clone(),
            Payoff::Polynomial { coord, coeffs } => {
                let w = state[*coord];
                vec![coeffs.iter().rev().fold(0.0, |acc, c| acc * w + c)]
            }
            Payoff::PositivePart { coord, strike, scale } => {
                vec![scale * (state[*coord] - strike).max(0.0)]
            }
            Payoff::Sign { coord } => {
                let w = state[*coord];
                vec![if w > 0.0 {
                    1.0
                } else if w < 0.0 {
                    -1.0
                } else {
                    0.0
                }]
            }
            Payoff::Custom(f) => f(t, state),
        }
    }
}

/// When each path stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalRule {
    /// At the grid horizon.
    Horizon,
    /// First node where coordinate `coord` leaves `(lo, hi)`, or the grid
    /// horizon if it never does (the truncation is counted in the instance).
    FirstExit { coord: usize, lo: f64, hi: f64 },
}

/// Which coefficient inequalities the driver is declared to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverMode {
    /// `|f(y,z) - f(y',z')| <= r |y - y'| + u |z - z'|`.
    Lipschitz,
    /// Monotone in `y` with coefficient `r`, growth `l (|y| + l')`, Lipschitz
    /// in `z` with `u`.
    Monotone { l_prime: u8 },
}

/// A Brownian BSDE `Y_t = xi + int_t^tau f ds + int_t^tau Z dW` with
/// deterministic coefficient processes on `grid`.
#[derive(Clone)]
pub struct WienerBSDEProblem {
    pub k: usize,
    pub d: usize,
    pub grid: Arc<TimeGrid>,
    pub driver: DriverFn,
    pub coeffs: CoefficientProcesses,
    pub terminal: TerminalRule,
    pub payoff: Payoff,
    pub mode: DriverMode,
}

impl fmt::Debug for WienerBSDEProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WienerBSDEProblem")
            .field("k", &self.k)
            .field("d", &self.d)
            .field("steps", &self.grid.steps())
            .field("terminal", &self.terminal)
            .field("payoff", &self.payoff)
            .field("mode", &self.mode)
            .finish()
    }
}

impl WienerBSDEProblem {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 {
            return Err(structure("k and d must be positive"));
        }
        if !self.coeffs.alpha_sq.grid().same_as(&self.grid) {
            return Err(structure("coefficients live on a different grid than the problem"));
        }
        if let TerminalRule::FirstExit { coord, lo, hi } = self.terminal {
            if coord >= self.d || !(lo < hi) {
                return Err(structure("first-exit rule needs coord < d and lo < hi"));
            }
        }
        Ok(())
    }

    /// Scalar linear problem `f(t, y, z) = r_t y + u_t z` with `d = 1`,
    /// deterministic `r`, `u` on a shared grid and
    /// `alpha^2 = max(|r|, u^2, eps)`.
    pub fn linear(r: SampledPath, u: SampledPath, payoff: Payoff, eps: f64) -> Result<Self> {
        let grid = r.grid_arc().clone();
        let abs_r = r.with_values(r.values().iter().map(|v| v.abs()).collect(), r.interp());
        let coeffs = CoefficientProcesses::lipschitz_floored(abs_r, u.clone(), eps)?;
        let driver: DriverFn = Arc::new(move |pt: &DriverPoint, y: &[f64], z: &[f64], out: &mut [f64]| {
            out[0] = r.eval_clamped(pt.t) * y[0] + u.eval_clamped(pt.t) * z[0];
        });
        Ok(Self {
            k: 1,
            d: 1,
            grid,
            driver,
            coeffs,
            terminal: TerminalRule::Horizon,
            payoff,
            mode: DriverMode::Lipschitz,
        })
    }

    /// Stop node of every path of `w` under the terminal rule.
    pub fn stop_indices(&self, w: &BrownianEnsemble) -> Vec<usize> {
        let n = w.grid().steps();
        (0..w.paths())
            .map(|p| match self.terminal {
                TerminalRule::Horizon => n,
                TerminalRule::FirstExit { coord, lo, hi } => (0..=n)
                    .find(|&j| {
                        let x = w.level(p, j)[coord];
                        x <= lo || x >= hi
                    })
                    .unwrap_or(n),
            })
            .collect()
    }
}

/// A fully discretized BSDE: everything a backward solver needs, in the
/// time of `grid`.
#[derive(Clone)]
pub struct BsdeInstance {
    pub k: usize,
    pub d: usize,
    pub grid: Arc<TimeGrid>,
    pub driver: DriverFn,
    /// Increments the martingale part is driven by (`W` or `W~`).
    pub noise: BrownianEnsemble,
    /// Regression state per path and node, `state[p][j * d + c]`, always
    /// the original Brownian level so the Markov property holds in both
    /// time scales.
    pub state: Vec<Vec<f64>>,
    pub stop_index: Vec<usize>,
    /// `xi` per path.
    pub terminal: Vec<Vec<f64>>,
    /// Lipschitz bound of the driver on each step, for the contraction guard.
    pub lipschitz: Vec<f64>,
    /// Paths whose terminal rule was cut at the grid horizon.
    pub truncated: usize,
}

impl BsdeInstance {
    /// Discretizes `problem` on its own grid with noise `w`.
    pub fn original(problem: &WienerBSDEProblem, w: &BrownianEnsemble) -> Result<Self> {
        problem.validate()?;
        if !w.grid().same_as(&problem.grid) || w.dim() != problem.d {
            return Err(structure("noise does not match the problem grid or dimension"));
        }
        let stop_index = problem.stop_indices(w);
        let n = problem.grid.steps();
        let truncated = match problem.terminal {
            TerminalRule::Horizon => 0,
            TerminalRule::FirstExit { coord, lo, hi } => (0..w.paths())
                .filter(|&p| {
                    let x = w.level(p, n)[coord];
                    stop_index[p] == n && x > lo && x < hi
                })
                .count(),
        };
        let terminal = stop_index
            .iter()
            .enumerate()
            .map(|(p, &j)| problem.payoff.eval(problem.grid.nodes()[j], w.level(p, j)))
            .collect::<Vec<_>>();
        if terminal.iter().any(|x| x.len() != problem.k) {
            return Err(structure("payoff returns the wrong number of components"));
        }
        let state = (0..w.paths())
            .map(|p| (0..=n).flat_map(|j| w.level(p, j).to_vec()).collect())
            .collect();
        let lipschitz = problem.coeffs.alpha_sq.values()[..n].to_vec();
        Ok(Self {
            k: problem.k,
            d: problem.d,
            grid: problem.grid.clone(),
            driver: problem.driver.clone(),
            noise: w.clone(),
            state,
            stop_index,
            terminal,
            lipschitz,
            truncated,
        })
    }

    pub fn paths(&self) -> usize {
        self.stop_index.len()
    }

    pub fn state_at(&self, p: usize, j: usize) -> &[f64] {
        &self.state[p][j * self.d..(j + 1) * self.d]
    }

    /// Rejects steps with `dt * L >= 1`.
    pub fn check_contraction(&self) -> Result<()> {
        for j in 0..self.grid.steps() {
            let v = self.grid.step(j) * self.lipschitz[j];
            if !(v < 1.0) {
                return Err(crate::Error::Contraction { step: j, value: v });
            }
        }
        Ok(())
    }
}
