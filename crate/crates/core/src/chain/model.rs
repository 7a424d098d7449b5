use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invariant, structure, Error, Result};

/// A non-negative rate as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum RateProfile {
    Constant(f64),
    /// `a + b t`
    Linear {
        a: f64,
        b: f64,
    },
    /// `sum_i c_i t^i`
    Polynomial(Vec<f64>),
}

impl RateProfile {
    fn coeffs(&self) -> Vec<f64> {
        match self {
            RateProfile::Constant(c) => vec![*c],
            RateProfile::Linear { a, b } => vec![*a, *b],
            RateProfile::Polynomial(c) => c.clone(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// `int_0^t` of the profile.
    pub fn integral(&self, t: f64) -> f64 {
        self.coeffs()
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, c)| acc * t + c / (i + 1) as f64)
            * t
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs().iter().skip(1).all(|&c| c == 0.0)
    }

    /// Largest value on `[0, horizon]`, taken over endpoints and a fine
    /// sample (exact for monotone profiles).
    pub fn max_on(&self, horizon: f64) -> f64 {
        (0..=256)
            .map(|i| self.eval(horizon * i as f64 / 256.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest `s >= t0` with `int_{t0}^s rate = mass`, or `None` if the
    /// mass is not reached by `t1`. The profile must be non-negative.
    pub fn invert_mass(&self, t0: f64, t1: f64, mass: f64) -> Option<f64> {
        let base = self.integral(t0);
        if self.integral(t1) - base < mass {
            return None;
        }
        let (mut lo, mut hi) = (t0, t1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.integral(mid) - base < mass {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        Some(hi)
    }
}

/// `A(t)`: column `j` holds the rates out of state `j`, so `A_ij` is the
/// rate `j -> i` and every column sums to zero.
pub type RateFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// A finite-state continuous-time Markov chain on the unit vectors `e_i`.
#[derive(Clone)]
pub struct MarkovChainModel {
    n: usize,
    rates: RateFn,
    /// Upper bound on every exit rate `-A_jj(t)`.
    bound: f64,
    initial: Vec<f64>,
    homogeneous: bool,
}

impl fmt::Debug for MarkovChainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkovChainModel")
            .field("n", &self.n)
            .field("bound", &self.bound)
            .field("initial", &self.initial)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

/// Checks the generator conditions of one rate matrix.
pub fn validate_generator(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(structure("rate matrix must be square"));
    }
    let n = a.nrows();
    for j in 0..n {
        let mut col = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let v = a[(i, j)];
            if i != j && !(v >= 0.0) {
                return Err(invariant(format!("negative off-diagonal rate A[{i},{j}] = {v}")));
            }
            col += v;
            scale = scale.max(v.abs());
        }
        if col.abs() > 1e-12 * scale.max(1.0) {
            return Err(invariant(format!("column {j} sums to {col}, not 0")));
        }
    }
    Ok(())
}

impl MarkovChainModel {
    /// Time-homogeneous chain; the bound is the largest exit rate.
    pub fn homogeneous(a: DMatrix<f64>, initial: Vec<f64>) -> Result<Self> {
        validate_generator(&a)?;
        let bound = (0..a.nrows()).map(|j| -a[(j, j)]).fold(0.0, f64::max);
        let n = a.nrows();
        let m = Self {
            n,
            rates: Arc::new(move |_| a.clone()),
            bound,
            initial,
            homogeneous: true,
        };
        m.check_initial()?;
        Ok(m)
    }

    /// Chain with arbitrary time-dependent rates and a declared exit-rate
    /// bound, validated on `probe_times`.
    pub fn time_varying(n: usize, rates: RateFn, bound: f64, initial: Vec<f64>, probe_times: &[f64]) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(invariant(format!(
                "rate bound must be finite and non-negative, got {bound}"
            )));
        }
        let m = Self {
            n,
            rates,
            bound,
            initial,
            homogeneous: false,
        };
        m.check_initial()?;
        for &t in probe_times {
            let a = m.rates(t);
            if a.nrows() != n {
                return Err(structure("rate function returns the wrong size"));
            }
            validate_generator(&a)?;
            m.check_bound(&a, t)?;
        }
        Ok(m)
    }

    /// Rates `from -> to` given by profiles; the bound is the largest exit
    /// rate on `[0, horizon]`.
    pub fn from_profiles(
        n: usize,
        entries: Vec<(usize, usize, RateProfile)>,
        initial: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        for (from, to, p) in &entries {
            if *from >= n || *to >= n || from == to {
                return Err(Error::Config(format!("invalid transition {from} -> {to}")));
            }
            if p.max_on(horizon) < 0.0 || (0..=64).any(|i| p.eval(horizon * i as f64 / 64.0) < 0.0) {
                return Err(invariant(format!("rate {from} -> {to} is negative somewhere")));
            }
        }
        let homogeneous = entries.iter().all(|e| e.2.is_constant());
        let mut exit = vec![RateProfile::Polynomial(vec![0.0]); n];
        for (from, _, p) in &entries {
            let mut c = exit[*from].coeffs();
            let add = p.coeffs();
            c.resize(c.len().max(add.len()), 0.0);
            for (i, v) in add.iter().enumerate() {
                c[i] += v;
            }
            exit[*from] = RateProfile::Polynomial(c);
        }
        let bound = exit.iter().map(|p| p.max_on(horizon)).fold(0.0, f64::max);
        let rates: RateFn = Arc::new(move |t| {
            let mut a = DMatrix::zeros(n, n);
            for (from, to, p) in &entries {
                let r = p.eval(t);
                a[(*to, *from)] += r;
                a[(*from, *from)] -= r;
            }
            a
        });
        let m = Self {
            n,
            rates,
            bound,
            initial,
            homogeneous,
        };
        m.check_initial()?;
        Ok(m)
    }

    pub(crate) fn from_parts(n: usize, rates: RateFn, bound: f64, initial: Vec<f64>, homogeneous: bool) -> Self {
        Self {
            n,
            rates,
            bound,
            initial,
            homogeneous,
        }
    }

    fn check_initial(&self) -> Result<()> {
        let s: f64 = self.initial.iter().sum();
        if self.initial.len() != self.n || self.initial.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(invariant(
                "initial distribution must be a probability vector over the states",
            ));
        }
        Ok(())
    }

    fn check_bound(&self, a: &DMatrix<f64>, t: f64) -> Result<()> {
        for j in 0..self.n {
            let q = -a[(j, j)];
            if q > self.bound * (1.0 + 1e-12) + 1e-300 {
                return Err(invariant(format!(
                    "exit rate {q} of state {j} at t = {t} exceeds the declared bound {}",
                    self.bound
                )));
            }
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn rates(&self, t: f64) -> DMatrix<f64> {
        (self.rates)(t)
    }

    pub fn rate_fn(&self) -> &RateFn {
        &self.rates
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Same rates, started from state `x`.
    pub fn started_at(&self, x: usize) -> Self {
        let mut m = self.clone();
        m.initial = (0..self.n).map(|i| if i == x { 1.0 } else { 0.0 }).collect();
        m
    }

    fn draw_initial(&self, rng: &mut ChaCha8Rng) -> usize {
        draw_categorical(rng, &self.initial)
    }
}

fn draw_categorical(rng: &mut ChaCha8Rng, w: &[f64]) -> usize {
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in w.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    w.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// One realization: `states[0]` until `jump_times[0]`, then `states[1]`, ...
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub jump_times: Vec<f64>,
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl ChainPath {
    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s <= t)]
    }

    /// State just before `t`.
    pub fn state_before(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s < t)]
    }

    /// First time the path is in `set`, if before the horizon.
    pub fn hitting_time(&self, set: &[usize]) -> Option<f64> {
        if set.contains(&self.states[0]) {
            return Some(0.0);
        }
        self.jump_times
            .iter()
            .zip(&self.states[1..])
            .find(|(_, s)| set.contains(s))
            .map(|(&t, _)| t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.jump_times.len() + 1 {
            return Err(structure("states must outnumber jump times by one"));
        }
        if self.jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invariant("jump times not strictly increasing"));
        }
        if self.states.windows(2).any(|w| w[0] == w[1]) {
            return Err(invariant("consecutive states coincide"));
        }
        Ok(())
    }
}

/// Outcome of a run that may also be killed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KilledOutcome {
    Reached(f64),
    Killed(f64),
    /// Neither by the horizon.
    Open,
}

struct Stepper<'a> {
    model: &'a MarkovChainModel,
    rng: ChaCha8Rng,
}

impl Stepper<'_> {
    /// Next candidate time and whether it is a real jump (thinning).
    /// Candidates past `horizon` are returned without a decision.
    fn next(&mut self, t: f64, x: usize, horizon: f64) -> Result<(f64, Option<usize>)> {
        let b = self.model.bound;
        if b == 0.0 {
            return Ok((f64::INFINITY, None));
        }
        let e: f64 = -(1.0 - self.rng.random::<f64>()).ln();
        let s = t + e / b;
        if s > horizon {
            return Ok((s, None));
        }
        let a = self.model.rates(s);
        self.model.check_bound(&a, s)?;
        let q = -a[(x, x)];
        if self.rng.random::<f64>() * b < q {
            let w: Vec<f64> = (0..self.model.n)
                .map(|i| if i == x { 0.0 } else { a[(i, x)] })
                .collect();
            Ok((s, Some(draw_categorical(&mut self.rng, &w))))
        } else {
            Ok((s, None))
        }
    }
}

fn rng_for(seed: u64, p: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p as u64);
    rng
}

/// Exact jump-time simulation by thinning against the rate bound. Path
/// `p` uses its own stream of `seed`. A rate above the bound is an error.
pub fn simulate_chain(model: &MarkovChainModel, horizon: f64, paths: usize, seed: u64) -> Result<Vec<ChainPath>> {
    if !(horizon > 0.0) {
        return Err(structure("horizon must be positive"));
    }
    (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut st = Stepper {
                model,
                rng: rng_for(seed, p),
            };
            let mut x = model.draw_initial(&mut st.rng);
            let mut path = ChainPath {
                jump_times: Vec::new(),
                states: vec![x],
                horizon,
            };
            let mut t = 0.0;
            loop {
                let (s, to) = st.next(t, x, horizon)?;
                if s > horizon {
                    break;
                }
                t = s;
                if let Some(y) = to {
                    x = y;
                    path.jump_times.push(t);
                    path.states.push(x);
                }
            }
            Ok(path)
        })
        .collect()
}

/// Runs the chain until it enters `target`, is killed at rate
/// `loss[x](t)` while in state `x`, or reaches the horizon. Killing uses
/// the exact cumulative hazard of the profiles.
pub fn simulate_killed(
    model: &MarkovChainModel,
    loss: &[RateProfile],
    target: &[usize],
    horizon: f64,
    paths: usize,
    seed: u64,
) -> Result<Vec<KilledOutcome>> {
    if loss.len() != model.n {
        return Err(structure("one loss profile per state is required"));
    }
    (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut st = Stepper {
                model,
                rng: rng_for(seed, p),
            };
            let mut x = model.draw_initial(&mut st.rng);
            let mut t = 0.0;
            let mut budget: f64 = -(1.0 - st.rng.random::<f64>()).ln();
            loop {
                if target.contains(&x) {
                    return Ok(KilledOutcome::Reached(t));
                }
                let (s, to) = st.next(t, x, horizon)?;
                let end = s.min(horizon);
                if let Some(k) = loss[x].invert_mass(t, end, budget) {
                    return Ok(KilledOutcome::Killed(k));
                }
                budget -= loss[x].integral(end) - loss[x].integral(t);
                if s > horizon {
                    return Ok(KilledOutcome::Open);
                }
                t = s;
                if let Some(y) = to {
                    x = y;
                }
            }
        })
        .collect()
}

/// Fraction of paths in each state at time `t`.
pub fn occupancy(paths: &[ChainPath], n: usize, t: f64) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for p in paths {
        c[p.state_at(t)] += 1.0;
    }
    c.iter().map(|v| v / paths.len() as f64).collect()
}
