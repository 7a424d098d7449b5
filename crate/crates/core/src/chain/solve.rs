use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::driver::GammaBalancedDriver;
use super::model::{simulate_chain, ChainPath, MarkovChainModel};
use crate::error::{precondition, structure, Error, Result};
use crate::numerics::{integrate_dopri, OdeOptions};
use crate::solution::{Scheme, SolutionEnsemble};
use crate::timechange::TimeGrid;

/// `g(t, x)`.
pub type TerminalFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// A chain BSDE stopped at the first hit of `hitting`, with terminal
/// value `g(tau, X_tau)`.
#[derive(Clone)]
pub struct ChainBSDEProblem {
    pub model: MarkovChainModel,
    pub driver: GammaBalancedDriver,
    pub hitting: Vec<usize>,
    pub terminal: TerminalFn,
    /// `(k, beta)` with `|g(t, x)| <= k (1 + t^beta)`.
    pub growth: (f64, f64),
    /// `f` depends on the path only through the current state.
    pub markovian: bool,
}

impl fmt::Debug for ChainBSDEProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChainBSDEProblem")
            .field("model", &self.model)
            .field("driver", &self.driver)
            .field("hitting", &self.hitting)
            .field("growth", &self.growth)
            .field("markovian", &self.markovian)
            .finish()
    }
}

impl ChainBSDEProblem {
    /// Checks the hitting set and probes the growth bound of `g` on `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        let n = self.model.states();
        if self.hitting.is_empty() {
            return Err(structure("hitting set is empty"));
        }
        if let Some(x) = self.hitting.iter().find(|&&x| x >= n) {
            return Err(Error::Config(format!("hitting state {x} is not a state of the chain")));
        }
        let (k, beta) = self.growth;
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
        for _ in 0..256 {
            let t = rng.random::<f64>() * horizon;
            for &x in &self.hitting {
                let g = (self.terminal)(t, x);
                if !(g.abs() <= k * (1.0 + t.powf(beta)) * (1.0 + 1e-12)) {
                    return Err(precondition(format!(
                        "|g({t}, {x})| = {} exceeds k(1 + t^beta)",
                        g.abs()
                    )));
                }
            }
        }
        Ok(())
    }

    fn in_hitting(&self, x: usize) -> bool {
        self.hitting.contains(&x)
    }

    /// Largest `|g|` over the hitting set on the probe times.
    fn terminal_scale(&self, times: &[f64]) -> f64 {
        times
            .iter()
            .flat_map(|&t| self.hitting.iter().map(move |&x| (t, x)))
            .map(|(t, x)| (self.terminal)(t, x).abs())
            .fold(0.0, f64::max)
    }
}

/// How [`solve_chain_bsde`] discretizes the problem.
#[derive(Debug, Clone, Copy)]
pub enum ChainScheme {
    /// Backward sweep over simulated paths with conditional expectations
    /// per current state; at each node the implicit equation in `y` is
    /// solved by at most `iterations` fixed-point steps.
    Picard { paths: usize, iterations: usize, seed: u64 },
    /// Backward ODE for `u(t, e_i)`; with `paths` the solution is also
    /// sampled along simulated paths.
    MarkovOde {
        opts: OdeOptions,
        paths: Option<(usize, u64)>,
    },
}

/// Solution of a hitting-time chain BSDE on `[0, T_max]`.
#[derive(Debug, Clone)]
pub struct ChainSolution {
    pub scheme: Scheme,
    pub grid: Arc<TimeGrid>,
    /// `values[node][state]`: `u(t, e_i)` (ODE) or the per-state mean of
    /// `Y` over active paths (Picard, NaN where no path is active).
    pub values: Vec<Vec<f64>>,
    /// `P(tau > T_max | X_0 = e_i)`.
    pub tail: Vec<f64>,
    /// Tail mass under the initial law times the largest terminal value.
    pub truncation_bound: f64,
    pub ensemble: Option<SolutionEnsemble>,
    pub initial: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ChainSolution {
    /// `Y_0` under the initial law and its standard error (0 for the ODE).
    pub fn y0(&self) -> (f64, f64) {
        match (&self.ensemble, self.scheme) {
            (Some(e), Scheme::Picard) => e.y0(),
            _ => {
                let v = self.initial.iter().zip(&self.values[0]).map(|(p, u)| p * u).sum();
                (v, 0.0)
            }
        }
    }

    /// `(t, Y_t)` at `state` on every node.
    pub fn state_path(&self, state: usize) -> Vec<(f64, f64)> {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&t, v)| (t, v[state]))
            .collect()
    }

    /// `node_time,state,Y` rows, one per node and state.
    pub fn write_table_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "node_time,state,Y")?;
        for (&t, row) in self.grid.nodes().iter().zip(&self.values) {
            for (i, v) in row.iter().enumerate() {
                writeln!(w, "{},{i},{}", crate::solution::fmt12(t), crate::solution::fmt12(*v))?;
            }
        }
        Ok(())
    }
}

/// Solves the problem on `grid` (whose horizon is the truncation `T_max`).
pub fn solve_chain_bsde(problem: &ChainBSDEProblem, scheme: ChainScheme, grid: &TimeGrid) -> Result<ChainSolution> {
    problem.validate(grid.horizon())?;
    match scheme {
        ChainScheme::MarkovOde { opts, paths } => {
            if !problem.markovian {
                return Err(Error::Unsupported("the ODE scheme needs a Markovian driver".into()));
            }
            let mut sol = solve_ode(problem, grid, opts)?;
            if let Some((p, seed)) = paths {
                sol.ensemble = Some(sample_along_paths(problem, &sol, p, seed)?);
            }
            Ok(sol)
        }
        ChainScheme::Picard {
            paths,
            iterations,
            seed,
        } => solve_picard(problem, grid, paths, iterations.max(1), seed),
    }
}

/// Evaluates inside `[a, b]` so piecewise data sees the cell's own value.
fn inside(t: f64, a: f64, b: f64) -> f64 {
    let eps = 1e-12 * (b - a).abs().max(1e-300) + 1e-13 * b.abs().max(a.abs());
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    t.clamp(lo + eps.min(0.25 * (hi - lo)), hi - eps.min(0.25 * (hi - lo)))
}

fn solve_ode(problem: &ChainBSDEProblem, grid: &TimeGrid, opts: OdeOptions) -> Result<ChainSolution> {
    let n = problem.model.states();
    let nodes = grid.nodes();
    let last = nodes.len() - 1;
    let big_t = grid.horizon();
    let hit: Vec<bool> = (0..n).map(|x| problem.in_hitting(x)).collect();
    let f = problem.driver.f.clone();
    let g = problem.terminal.clone();

    // state = [u_0..u_{n-1}, s_0..s_{n-1}], s the survival probability
    let mut state = vec![0.0; 2 * n];
    for i in 0..n {
        state[i] = if hit[i] { g(big_t, i) } else { 0.0 };
        state[n + i] = if hit[i] { 0.0 } else { 1.0 };
    }
    let mut values = vec![vec![0.0; n]; nodes.len()];
    values[last] = state[..n].to_vec();
    for j in (0..last).rev() {
        let (a, b) = (nodes[j + 1], nodes[j]);
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let t = inside(t, a, b);
            let rates = problem.model.rates(t);
            let mut z = vec![0.0; n];
            for i in 0..n {
                z[i] = if hit[i] { g(t, i) } else { y[i] };
            }
            for i in 0..n {
                if hit[i] {
                    dy[i] = 0.0;
                    dy[n + i] = 0.0;
                    continue;
                }
                let mut jump = 0.0;
                let mut surv = 0.0;
                for k in 0..n {
                    if k != i {
                        jump += rates[(k, i)] * (z[k] - z[i]);
                        surv += rates[(k, i)] * (y[n + k] - y[n + i]);
                    }
                }
                dy[i] = -(jump + f(t, i, z[i], &z));
                dy[n + i] = -surv;
            }
        };
        let out = integrate_dopri(rhs, &state, &[a, b], opts)?;
        state = out.states[1].clone();
        for i in 0..n {
            if hit[i] {
                state[i] = g(b, i);
            }
        }
        values[j] = state[..n].to_vec();
    }
    let tail: Vec<f64> = state[n..].to_vec();
    let initial = problem.model.initial().to_vec();
    let mass: f64 = initial.iter().zip(&tail).map(|(p, s)| p * s).sum();
    Ok(ChainSolution {
        scheme: Scheme::MarkovOde,
        grid: Arc::new(grid.clone()),
        values,
        tail,
        truncation_bound: mass * problem.terminal_scale(nodes),
        ensemble: None,
        initial,
        warnings: Vec::new(),
    })
}

/// State at every node, and the stop node with the terminal value.
struct Discretized {
    states: Vec<Vec<usize>>,
    stop: Vec<usize>,
    xi: Vec<f64>,
}

fn discretize(problem: &ChainBSDEProblem, paths: &[ChainPath], grid: &TimeGrid) -> Discretized {
    let last = grid.len() - 1;
    let mut d = Discretized {
        states: Vec::with_capacity(paths.len()),
        stop: Vec::with_capacity(paths.len()),
        xi: Vec::with_capacity(paths.len()),
    };
    for p in paths {
        d.states.push(grid.nodes().iter().map(|&t| p.state_at(t)).collect());
        match p.hitting_time(&problem.hitting) {
            Some(tau) => {
                d.stop.push(grid.snap_up(tau).unwrap_or(last));
                d.xi.push((problem.terminal)(tau, p.state_at(tau)));
            }
            None => {
                d.stop.push(last);
                d.xi.push(0.0);
            }
        }
    }
    d
}

fn sample_along_paths(
    problem: &ChainBSDEProblem,
    sol: &ChainSolution,
    paths: usize,
    seed: u64,
) -> Result<SolutionEnsemble> {
    let grid = sol.grid.clone();
    let sim = simulate_chain(&problem.model, grid.horizon(), paths, seed)?;
    let d = discretize(problem, &sim, &grid);
    let n = problem.model.states();
    let mut ens = SolutionEnsemble::zeros(grid.clone(), 1, n, paths, Scheme::MarkovOde);
    ens.seed = Some(seed);
    for p in 0..paths {
        ens.stop_index[p] = d.stop[p];
        for j in 0..grid.len() {
            ens.y[p][j] = if j >= d.stop[p] {
                d.xi[p]
            } else {
                sol.values[j][d.states[p][j]]
            };
            if j < d.stop[p] {
                ens.z[p][j * n..(j + 1) * n].copy_from_slice(&sol.values[j]);
            }
        }
    }
    Ok(ens)
}

fn solve_picard(
    problem: &ChainBSDEProblem,
    grid: &TimeGrid,
    paths: usize,
    iterations: usize,
    seed: u64,
) -> Result<ChainSolution> {
    if paths < 2 {
        return Err(structure("Picard needs at least two paths"));
    }
    let n = problem.model.states();
    let nodes = grid.nodes();
    let last = nodes.len() - 1;
    for j in 0..last {
        let v = grid.step(j) * (problem.driver.c)(nodes[j]).max((problem.driver.c)(nodes[j + 1]));
        if !(v < 1.0) {
            return Err(Error::Contraction { step: j, value: v });
        }
    }
    let sim = simulate_chain(&problem.model, grid.horizon(), paths, seed)?;
    let d = discretize(problem, &sim, grid);
    let f = &problem.driver.f;

    // table[j][x]: Y at node j in state x; zt[j][x]: Z there
    let mut table = vec![vec![f64::NAN; n]; nodes.len()];
    let mut zt = vec![vec![vec![0.0; n]; n]; nodes.len()];
    let mut yp: Vec<f64> = d.xi.clone();
    let mut distances = vec![0.0; iterations];
    let mut diverged = false;
    for j in (0..last).rev() {
        // Y_{j+1} per path: xi once stopped, else the table at the next state
        if j + 1 < last {
            for p in 0..paths {
                if j + 1 < d.stop[p] {
                    yp[p] = table[j + 1][d.states[p][j + 1]];
                }
            }
        }
        let mut sum = vec![(0.0, 0usize); n];
        let mut next = vec![vec![(0.0, 0usize); n]; n];
        for p in 0..paths {
            if j < d.stop[p] {
                let x = d.states[p][j];
                sum[x].0 += yp[p];
                sum[x].1 += 1;
                let e = &mut next[x][d.states[p][j + 1]];
                e.0 += yp[p];
                e.1 += 1;
            }
        }
        let dt = grid.step(j);
        for x in (0..n).filter(|&x| sum[x].1 > 0) {
            let cond = sum[x].0 / sum[x].1 as f64;
            let stay = next[x][x];
            let base = if stay.1 > 0 { stay.0 / stay.1 as f64 } else { cond };
            let z: Vec<f64> = next[x]
                .iter()
                .map(|e| if e.1 > 0 { e.0 / e.1 as f64 } else { base })
                .collect();
            // y = cond + f(t_j, x, y, z) dt, a contraction since dt * C < 1
            let mut y = cond;
            let mut prev = f64::INFINITY;
            for (k, slot) in distances.iter_mut().enumerate() {
                let ny = cond + f(nodes[j], x, y, &z) * dt;
                let dist = (ny - y).abs();
                *slot = f64::max(*slot, dist);
                if k >= 1 && dist > prev && dist > 1e-12 {
                    diverged = true;
                }
                prev = dist;
                y = ny;
                if dist <= 1e-15 * y.abs().max(1.0) {
                    break;
                }
            }
            table[j][x] = y;
            zt[j][x] = z;
        }
    }

    let mut ens = SolutionEnsemble::zeros(Arc::new(grid.clone()), 1, n, paths, Scheme::Picard);
    ens.seed = Some(seed);
    let mut realized = vec![0.0; paths];
    for p in 0..paths {
        ens.stop_index[p] = d.stop[p];
        let mut acc = d.xi[p];
        for j in (0..nodes.len()).rev() {
            if j >= d.stop[p] {
                ens.y[p][j] = d.xi[p];
                continue;
            }
            let x = d.states[p][j];
            ens.y[p][j] = table[j][x];
            ens.z[p][j * n..(j + 1) * n].copy_from_slice(&zt[j][x]);
            acc += f(nodes[j], x, table[j][x], &zt[j][x]) * grid.step(j);
        }
        realized[p] = acc;
    }
    while distances.len() > 1 && distances[distances.len() - 1] == 0.0 {
        distances.pop();
    }
    ens.iterate_distances = distances;
    ens.diverged = diverged;
    // the table is exact per state, so the spread of realized cash flows
    // measures the Monte Carlo error of Y_0
    ens.y_se[0] = crate::numerics::std_dev(&realized) / (paths as f64).sqrt();

    let mut values = vec![vec![f64::NAN; n]; nodes.len()];
    for (j, row) in values.iter_mut().enumerate() {
        let mut acc = vec![(0.0, 0usize); n];
        for p in 0..paths {
            if j < d.stop[p] {
                let x = d.states[p][j];
                acc[x].0 += ens.y[p][j];
                acc[x].1 += 1;
            }
        }
        for i in 0..n {
            if problem.in_hitting(i) {
                row[i] = (problem.terminal)(nodes[j], i);
            } else if acc[i].1 > 0 {
                row[i] = acc[i].0 / acc[i].1 as f64;
            }
        }
    }
    let open: Vec<bool> = sim.iter().map(|p| p.hitting_time(&problem.hitting).is_none()).collect();
    let mut tail = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (p, &o) in open.iter().enumerate() {
        let x0 = d.states[p][0];
        count[x0] += 1;
        if o {
            tail[x0] += 1.0;
        }
    }
    for i in 0..n {
        tail[i] = if count[i] > 0 {
            tail[i] / count[i] as f64
        } else {
            f64::NAN
        };
    }
    let mass = open.iter().filter(|&&o| o).count() as f64 / paths as f64;
    let mut warnings = Vec::new();
    if diverged {
        warnings.push("Picard iterates diverged".to_string());
    }
    Ok(ChainSolution {
        scheme: Scheme::Picard,
        grid: Arc::new(grid.clone()),
        values,
        tail,
        truncation_bound: mass * problem.terminal_scale(nodes),
        ensemble: Some(ens),
        initial: problem.model.initial().to_vec(),
        warnings,
    })
}
