use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::driver::transform_chain;
use super::driver::{chain_clock, transform_chain_driver, GammaBalancedDriver, TimeFn};
use super::model::{simulate_killed, KilledOutcome, MarkovChainModel, RateProfile};
use super::solve::{solve_chain_bsde, ChainBSDEProblem, ChainScheme, ChainSolution};
use crate::error::{precondition, Error, Result};
use crate::numerics::{integrate_gl, OdeOptions, Summary};
use crate::timechange::{TimeChangeMap, TimeGrid};

/// `E[(1 + t + E/lambda)^p]` for `E ~ Exp(1)`.
pub fn exp_moment(t: f64, lambda: f64, p: f64) -> f64 {
    (0..80)
        .map(|k| {
            let a = k as f64 * 0.5;
            integrate_gl(|w| (-w).exp() * (1.0 + t + w / lambda).powf(p), a, a + 0.5, 8)
        })
        .sum()
}

/// Discretization and sampling settings for [`message_transmission`].
#[derive(Debug, Clone, Copy)]
pub struct MessageSettings {
    /// Truncation horizon of the hitting-time problem.
    pub t_max: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub beta: f64,
}

impl Default for MessageSettings {
    fn default() -> Self {
        Self {
            t_max: 20.0,
            steps: 2000,
            paths: 20_000,
            seed: 7,
            beta: 0.1,
        }
    }
}

/// Reach probability of the target from three independent routes.
#[derive(Debug, Clone)]
pub struct MessageReport {
    /// Solved on the clock and carried back to original time.
    pub bsde: ChainSolution,
    /// The same problem solved directly in original time.
    pub direct: ChainSolution,
    /// Killed-chain frequency of reaching the target.
    pub monte_carlo: Summary,
    pub clock: TimeChangeMap,
    pub problem: ChainBSDEProblem,
    pub source: usize,
}

impl MessageReport {
    pub fn bsde_y0(&self) -> f64 {
        self.bsde.values[0][self.source]
    }

    pub fn direct_y0(&self) -> f64 {
        self.direct.values[0][self.source]
    }
}

/// Builds the loss BSDE `f = -r(t, x) y`, `xi = 1{X_tau = target}` and
/// solves it through the clock `alpha^2 = max(max_x r(t, x), 1)`, directly,
/// and by killed-chain simulation.
pub fn message_transmission(
    graph: &MarkovChainModel,
    loss: &[RateProfile],
    source: usize,
    target: usize,
    settings: MessageSettings,
) -> Result<MessageReport> {
    let n = graph.states();
    if target >= n || source >= n {
        return Err(Error::Config(format!(
            "source {source} or target {target} is not a state"
        )));
    }
    if loss.len() != n {
        return Err(Error::Config("one loss profile per state is required".into()));
    }
    for k in 0..=16 {
        let t = settings.t_max * k as f64 / 16.0;
        if graph.rates(t)[(target, target)] != 0.0 {
            return Err(precondition("target state must be absorbing"));
        }
        if loss.iter().any(|p| p.eval(t) < 0.0) {
            return Err(precondition("loss rates must be non-negative"));
        }
    }
    let model = graph.started_at(source);
    let exit = exit_rate_floor(&model, target, settings.t_max);
    let beta = settings.beta;
    let span = 4.0 * settings.t_max;
    // K_2 integrates K_1 up to 40 / exit past its own span
    let k1 = tabulate(
        Arc::new(move |t| exp_moment(t, exit, 1.0 + beta)),
        span + 40.0 / exit,
        8192,
    );
    let k2: TimeFn = {
        let k1 = k1.clone();
        let exact: TimeFn = Arc::new(move |t| {
            (0..40)
                .map(|k| {
                    let a = k as f64;
                    integrate_gl(|w| (-w).exp() * k1(t + w / exit).powf(1.0 + beta), a, a + 1.0, 6)
                })
                .sum()
        });
        tabulate(exact, span, 1024)
    };
    let driver = GammaBalancedDriver::loss(&model, loss).with_k(beta, beta, k1, k2);
    let problem = ChainBSDEProblem {
        model: model.clone(),
        driver: driver.clone(),
        hitting: vec![target],
        terminal: Arc::new(|_, _| 1.0),
        growth: (1.0, 0.0),
        markovian: true,
    };
    let grid = TimeGrid::uniform(settings.t_max, settings.steps)?;
    let ode = ChainScheme::MarkovOde {
        opts: OdeOptions::default(),
        paths: None,
    };
    let direct = solve_chain_bsde(&problem, ode, &grid)?;

    let clock = chain_clock(&driver, settings.t_max, settings.steps)?;
    let changed = ChainBSDEProblem {
        model: transform_chain(&model, &clock)?,
        driver: transform_chain_driver(&driver, &clock)?,
        ..problem.clone()
    };
    let image = clock.image_grid()?;
    let mut bsde = solve_chain_bsde(&changed, ode, &image)?;
    // node j of the image grid is phi(t_j)
    bsde.grid = Arc::new(grid.clone());

    let outcomes = simulate_killed(&model, loss, &[target], settings.t_max, settings.paths, settings.seed)?;
    let hits: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            if matches!(o, KilledOutcome::Reached(_)) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(MessageReport {
        bsde,
        direct,
        monte_carlo: Summary::of(&hits),
        clock,
        problem,
        source,
    })
}

/// Linear interpolation of `f` on `n` cells over `[0, span]`, `f` itself
/// beyond. For convex `f` the table lies above `f`.
fn tabulate(f: TimeFn, span: f64, n: usize) -> TimeFn {
    let h = span / n as f64;
    let table: Vec<f64> = (0..=n).map(|i| f(i as f64 * h)).collect();
    Arc::new(move |t| {
        if !(t >= 0.0 && t < span) {
            return f(t);
        }
        let i = ((t / h) as usize).min(n - 1);
        let w = t / h - i as f64;
        table[i] + w * (table[i + 1] - table[i])
    })
}

/// Smallest exit rate over the non-target states on `[0, horizon]`, the
/// rate of the slowest exponential passage used by the default `K_1`.
fn exit_rate_floor(model: &MarkovChainModel, target: usize, horizon: f64) -> f64 {
    let mut lo = f64::INFINITY;
    for k in 0..=64 {
        let a = model.rates(horizon * k as f64 / 64.0);
        for x in (0..model.states()).filter(|&x| x != target) {
            lo = lo.min(-a[(x, x)]);
        }
    }
    lo.max(1e-6)
}

/// Which a priori bound [`verify_bound`] checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundVariant {
    /// `(1 + C_2) e^{C_1} K_1(t)`
    Lemma41,
    /// `2 e^{C_1} K_1(t)`
    Thm42,
    /// `e^{C_1} K_1(t)`
    Thm44,
    /// `(1 + 1/m) e^{C_1} K_1(t)` after growth normalization with `m`.
    Normalized(f64),
}

impl BoundVariant {
    pub fn factor(&self, driver: &GammaBalancedDriver) -> f64 {
        let e = driver.c1.exp();
        match *self {
            BoundVariant::Lemma41 => (1.0 + driver.c2) * e,
            BoundVariant::Thm42 => 2.0 * e,
            BoundVariant::Thm44 => e,
            BoundVariant::Normalized(m) => (1.0 + 1.0 / m) * e,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub sup_ratio: f64,
    pub pass: bool,
}

/// `sup |Y_t| / bound(t)` over every node and state of the table and, when
/// present, every path of the ensemble.
pub fn verify_bound(sol: &ChainSolution, driver: &GammaBalancedDriver, variant: BoundVariant, tol: f64) -> BoundReport {
    let factor = variant.factor(driver);
    let nodes = sol.grid.nodes();
    let mut sup: f64 = 0.0;
    for (j, row) in sol.values.iter().enumerate() {
        let b = factor * (driver.k1)(nodes[j]).abs();
        for v in row.iter().filter(|v| v.is_finite()) {
            sup = sup.max(v.abs() / b);
        }
    }
    if let Some(e) = &sol.ensemble {
        for j in 0..e.nodes() {
            let b = factor * (driver.k1)(nodes[j]).abs();
            for p in 0..e.paths() {
                sup = sup.max(e.y_at(p, j)[0].abs() / b);
            }
        }
    }
    BoundReport {
        variant,
        sup_ratio: sup,
        pass: sup <= 1.0 + tol,
    }
}

/// Worst ratio of each `K` condition over a family of perturbed chains.
#[derive(Debug, Clone, PartialEq)]
pub struct KReport {
    pub members: usize,
    /// `sup E^Q[xi | X_t] / K_1(t)`
    pub terminal: f64,
    /// `sup E^Q[(1 + tau)^{1 + beta} | X_t] / K_1(t)`
    pub moment: f64,
    /// `sup E^Q[K_1(tau)^{1 + beta~} | X_t] / K_2(t)`
    pub nested: f64,
}

impl KReport {
    pub fn passes(&self) -> bool {
        self.terminal <= 1.0 && self.moment <= 1.0 && self.nested <= 1.0
    }
}

/// Checks the `K_1`, `K_2` conditions under the chain itself and under
/// `members - 1` chains whose off-diagonal rates are scaled by fixed random
/// factors in `[gamma, 1/gamma]`. Conditional expectations come from the
/// backward ODE truncated at `horizon`, so this is a necessary check only.
pub fn validate_k_functions(
    problem: &ChainBSDEProblem,
    members: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<KReport> {
    let d = &problem.driver;
    let n = problem.model.states();
    let grid = TimeGrid::uniform(horizon, steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = KReport {
        members,
        terminal: 0.0,
        moment: 0.0,
        nested: 0.0,
    };
    for m in 0..members.max(1) {
        let scale: Vec<f64> = (0..n * n)
            .map(|_| {
                if m == 0 {
                    1.0
                } else {
                    rng.random_range(d.gamma..=1.0 / d.gamma)
                }
            })
            .collect();
        let base = problem.model.rate_fn().clone();
        let rates = Arc::new(move |t: f64| {
            let mut a = base(t);
            for j in 0..n {
                a[(j, j)] = 0.0;
                for i in (0..n).filter(|&i| i != j) {
                    a[(i, j)] *= scale[i * n + j];
                    a[(j, j)] -= a[(i, j)];
                }
            }
            a
        });
        let bound = problem.model.bound() / d.gamma;
        let model = MarkovChainModel::time_varying(n, rates, bound, problem.model.initial().to_vec(), &[0.0, horizon])?;
        let zero = GammaBalancedDriver::z_free(&model, Arc::new(|_, _, _, _| 0.0));
        let run = |g: Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>| -> Result<ChainSolution> {
            let p = ChainBSDEProblem {
                model: model.clone(),
                driver: zero.clone(),
                hitting: problem.hitting.clone(),
                terminal: g,
                growth: (f64::INFINITY, 0.0),
                markovian: true,
            };
            solve_chain_bsde(
                &p,
                ChainScheme::MarkovOde {
                    opts: OdeOptions::default(),
                    paths: None,
                },
                &grid,
            )
        };
        let g = problem.terminal.clone();
        let beta = d.beta;
        let k1 = d.k1.clone();
        let bt = d.beta_tilde;
        let a = run(Arc::new(move |t, x| g(t, x).abs()))?;
        let b = run(Arc::new(move |t, _| (1.0 + t).powf(1.0 + beta)))?;
        let c = run(Arc::new(move |t, _| k1(t).powf(1.0 + bt)))?;
        for (j, &t) in grid.nodes().iter().enumerate() {
            let (k1t, k2t) = ((d.k1)(t), (d.k2)(t));
            for i in 0..n {
                rep.terminal = rep.terminal.max(a.values[j][i] / k1t);
                rep.moment = rep.moment.max(b.values[j][i] / k1t);
                rep.nested = rep.nested.max(c.values[j][i] / k2t);
            }
        }
    }
    Ok(rep)
}
