use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{MarkovChainModel, RateProfile};
use crate::error::{invariant, precondition, Result};
use crate::timechange::{
    build_phi_on_image, CoefficientProcesses, IncreasingProcess, Interp, SampledPath, TimeChangeMap, TimeGrid,
};

/// `f(t, x, y, z)` with `x` the state index and `z` in `R^N`.
pub type ChainDriverFn = Arc<dyn Fn(f64, usize, f64, &[f64]) -> f64 + Send + Sync>;
/// `eta(t, x, z, z')` in `R^N`.
pub type EtaFn = Arc<dyn Fn(f64, usize, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// A deterministic function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A chain driver together with its compensator perturbation `eta` and the
/// growth constants used by the a priori bounds.
#[derive(Clone)]
pub struct GammaBalancedDriver {
    pub f: ChainDriverFn,
    pub eta: EtaFn,
    pub gamma: f64,
    /// Bound on the y-Lipschitz coefficient, uniform over states.
    pub c: TimeFn,
    pub c1: f64,
    pub c2: f64,
    pub beta_hat: f64,
    pub beta: f64,
    pub beta_tilde: f64,
    pub k1: TimeFn,
    pub k2: TimeFn,
}

impl fmt::Debug for GammaBalancedDriver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GammaBalancedDriver")
            .field("gamma", &self.gamma)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("beta_hat", &self.beta_hat)
            .field("beta", &self.beta)
            .field("beta_tilde", &self.beta_tilde)
            .finish()
    }
}

impl GammaBalancedDriver {
    /// Zero y-coefficient, zero constants and `K_1 = K_2 = 1` until set.
    pub fn new(f: ChainDriverFn, eta: EtaFn, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(precondition(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        Ok(Self {
            f,
            eta,
            gamma,
            c: Arc::new(|_| 0.0),
            c1: 0.0,
            c2: 0.0,
            beta_hat: 0.0,
            beta: 0.0,
            beta_tilde: 0.0,
            k1: Arc::new(|_| 1.0),
            k2: Arc::new(|_| 1.0),
        })
    }

    /// A driver without z-dependence: `eta = A_t e_x`, every ratio is 1.
    pub fn z_free(model: &MarkovChainModel, h: ChainDriverFn) -> Self {
        let rates = model.rate_fn().clone();
        let f: ChainDriverFn = Arc::new(move |t, x, y, _z| h(t, x, y, &[]));
        let eta: EtaFn = Arc::new(move |t, x, _, _| rates(t).column(x).iter().copied().collect());
        Self::new(f, eta, 1.0).expect("gamma = 1")
    }

    /// `f = h(t, x, y) + sum_{i != x} A_ix(t) g(z_i - z_x)`. The secant slopes
    /// of `g` must lie in `[gamma - 1, 1/gamma - 1]`; `eta` is built from
    /// them, so the difference identity holds exactly.
    pub fn secant_family(
        model: &MarkovChainModel,
        gamma: f64,
        h: ChainDriverFn,
        g: TimeFn,
        g_prime: TimeFn,
    ) -> Result<Self> {
        let rates = model.rate_fn().clone();
        let n = model.states();
        let (r1, g1) = (rates.clone(), g.clone());
        let f: ChainDriverFn = Arc::new(move |t, x, y, z| {
            let a = r1(t);
            h(t, x, y, z)
                + (0..n)
                    .filter(|&i| i != x)
                    .map(|i| a[(i, x)] * g1(z[i] - z[x]))
                    .sum::<f64>()
        });
        let eta: EtaFn = Arc::new(move |t, x, z, zp| {
            let a = rates(t);
            let mut out = vec![0.0; n];
            for i in (0..n).filter(|&i| i != x) {
                let (w, wp) = (z[i] - z[x], zp[i] - zp[x]);
                let slope = if w == wp { g_prime(w) } else { (g(w) - g(wp)) / (w - wp) };
                out[i] = a[(i, x)] * (1.0 + slope);
                out[x] -= out[i];
            }
            out
        });
        Self::new(f, eta, gamma)
    }

    /// `f = -r(t, x) y`, the loss driver of the message model. `C(t)` is
    /// the largest loss rate over the states and `C_1 = C_2 = 0`.
    pub fn loss(model: &MarkovChainModel, loss: &[RateProfile]) -> Self {
        let l1: Vec<RateProfile> = loss.to_vec();
        let l2 = l1.clone();
        let mut d = Self::z_free(model, Arc::new(move |t, x, y, _| -l1[x].eval(t) * y));
        d.c = Arc::new(move |t| l2.iter().map(|p| p.eval(t)).fold(0.0, f64::max));
        d
    }

    pub fn with_y_coefficient(mut self, c: TimeFn) -> Self {
        self.c = c;
        self
    }

    pub fn with_constants(mut self, c1: f64, c2: f64, beta_hat: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self.beta_hat = beta_hat;
        self
    }

    pub fn with_k(mut self, beta: f64, beta_tilde: f64, k1: TimeFn, k2: TimeFn) -> Self {
        self.beta = beta;
        self.beta_tilde = beta_tilde;
        self.k1 = k1;
        self.k2 = k2;
        self
    }
}

/// Worst violation of each balance condition over the probes.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub probes: usize,
    pub identity: f64,
    pub ratio: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub sum: f64,
    pub shift: f64,
    pub tolerance: f64,
}

impl GammaReport {
    pub fn passes(&self) -> bool {
        [self.identity, self.ratio, self.sum, self.shift]
            .iter()
            .all(|&v| v <= self.tolerance)
    }
}

/// Probes the four balance conditions at random `(t, x, y, z, z', alpha)`
/// with `t` in `[0, horizon]` and entries of `z` in `[-2, 2]`.
pub fn check_gamma_balanced(
    driver: &GammaBalancedDriver,
    model: &MarkovChainModel,
    probes: usize,
    horizon: f64,
    seed: u64,
) -> Result<GammaReport> {
    if probes == 0 {
        return Err(precondition("at least one probe is required"));
    }
    let n = model.states();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9;
    let mut rep = GammaReport {
        probes,
        identity: 0.0,
        ratio: 0.0,
        ratio_min: f64::INFINITY,
        ratio_max: f64::NEG_INFINITY,
        sum: 0.0,
        shift: 0.0,
        tolerance: tol,
    };
    let g = driver.gamma;
    for _ in 0..probes {
        let t = rng.random::<f64>() * horizon;
        let x = rng.random_range(0..n);
        let y = rng.random_range(-2.0..2.0);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let zp: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let alpha = rng.random_range(-3.0..3.0);
        let a = model.rates(t);
        let eta = (driver.eta)(t, x, &z, &zp);

        let lhs = (driver.f)(t, x, y, &z) - (driver.f)(t, x, y, &zp);
        let rhs: f64 = (0..n).map(|i| (z[i] - zp[i]) * (eta[i] - a[(i, x)])).sum();
        rep.identity = rep.identity.max((lhs - rhs).abs() / (1.0 + lhs.abs()));

        for (i, &e) in eta.iter().enumerate() {
            let d = a[(i, x)];
            let r = if e == 0.0 && d == 0.0 { 1.0 } else { e / d };
            let miss = if r.is_nan() {
                f64::INFINITY
            } else {
                (g - r).max(r - 1.0 / g).max(0.0)
            };
            rep.ratio = rep.ratio.max(miss);
            if r.is_finite() {
                rep.ratio_min = rep.ratio_min.min(r);
                rep.ratio_max = rep.ratio_max.max(r);
            }
        }
        rep.sum = rep.sum.max(eta.iter().sum::<f64>().abs());

        let zs: Vec<f64> = z.iter().map(|v| v + alpha).collect();
        let zps: Vec<f64> = zp.iter().map(|v| v + alpha).collect();
        let eta_s = (driver.eta)(t, x, &zs, &zps);
        let shift = eta.iter().zip(&eta_s).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        rep.shift = rep.shift.max(shift);
    }
    Ok(rep)
}

/// Largest value of `h` at the ends and midpoint of `[a, b]`.
fn cell_max(h: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    h(a).max(h(0.5 * (a + b))).max(h(b))
}

fn clock_from_density(grid: Arc<TimeGrid>, alpha_sq: Vec<f64>) -> Result<TimeChangeMap> {
    let zero = SampledPath::constant(grid.clone(), 0.0);
    let a = SampledPath::new(grid.clone(), alpha_sq, Interp::StepLeft)?;
    let coeffs = CoefficientProcesses::custom(zero.clone(), zero, a, 1.0)?;
    build_phi_on_image(&coeffs, &IncreasingProcess::identity(grid))
}

/// The clock with `alpha^2 = max{C(t), C_2, 1}` on a uniform grid over
/// `[0, horizon]`, `C` maximized over each cell, targeted at the image grid.
pub fn chain_clock(driver: &GammaBalancedDriver, horizon: f64, steps: usize) -> Result<TimeChangeMap> {
    let grid = Arc::new(TimeGrid::uniform(horizon, steps)?);
    let n = grid.nodes();
    let c = driver.c.clone();
    let alpha: Vec<f64> = (0..n.len())
        .map(|i| {
            let b = if i + 1 < n.len() { n[i + 1] } else { n[i] };
            cell_max(&*c, n[i], b).max(driver.c2).max(1.0)
        })
        .collect();
    clock_from_density(grid, alpha)
}

fn check_unit_floor(clock: &TimeChangeMap) -> Result<()> {
    if let Some((i, a)) = clock
        .density()
        .values()
        .iter()
        .enumerate()
        .find(|(_, &a)| a < 1.0 - 1e-12)
    {
        return Err(invariant(format!(
            "clock density {a} < 1 at node {i}: the clock runs slower than time"
        )));
    }
    Ok(())
}

/// `phi^{-1}` and `(phi^{-1})'` continued past the clock's horizon.
fn inverse_pair(clock: &Arc<TimeChangeMap>) -> (TimeFn, TimeFn) {
    let (c1, c2) = (clock.clone(), clock.clone());
    (
        Arc::new(move |s| c1.phi_inv_extended(s)),
        Arc::new(move |s| c2.phi_inv_derivative(s)),
    )
}

/// Rates `A~_s = A_{phi^{-1}(s)} (phi^{-1})'(s)`.
pub fn transform_chain(model: &MarkovChainModel, clock: &TimeChangeMap) -> Result<MarkovChainModel> {
    check_unit_floor(clock)?;
    let clock = Arc::new(clock.clone());
    let (inv, slope) = inverse_pair(&clock);
    let rates = model.rate_fn().clone();
    let dens = clock.density().values();
    let min_alpha = dens.iter().copied().fold(f64::INFINITY, f64::min);
    let constant = dens.iter().all(|&a| a == dens[0]);
    let f = Arc::new(move |s: f64| rates(inv(s)) * slope(s));
    Ok(MarkovChainModel::from_parts(
        model.states(),
        f,
        model.bound() / min_alpha,
        model.initial().to_vec(),
        model.is_homogeneous() && constant,
    ))
}

/// `f~ = f(phi^{-1}(s), .) (phi^{-1})'(s)` and `eta~` likewise; `C~` scales
/// the same way and `K_1`, `K_2` are read at `phi^{-1}(s)`.
pub fn transform_chain_driver(driver: &GammaBalancedDriver, clock: &TimeChangeMap) -> Result<GammaBalancedDriver> {
    check_unit_floor(clock)?;
    let clock = Arc::new(clock.clone());
    let (inv, slope) = inverse_pair(&clock);
    let mut out = driver.clone();
    let (f, eta, c, k1, k2) = (
        driver.f.clone(),
        driver.eta.clone(),
        driver.c.clone(),
        driver.k1.clone(),
        driver.k2.clone(),
    );
    let (i1, s1) = (inv.clone(), slope.clone());
    out.f = Arc::new(move |s, x, y, z| f(i1(s), x, y, z) * s1(s));
    let (i2, s2) = (inv.clone(), slope.clone());
    out.eta = Arc::new(move |s, x, z, zp| {
        let d = s2(s);
        eta(i2(s), x, z, zp).into_iter().map(|v| v * d).collect()
    });
    let (i3, s3) = (inv.clone(), slope);
    out.c = Arc::new(move |s| c(i3(s)) * s3(s));
    let i4 = inv.clone();
    out.k1 = Arc::new(move |s| k1(i4(s)));
    out.k2 = Arc::new(move |s| k2(inv(s)));
    Ok(out)
}

/// The clock `m int (max_x |f(s, x, 0, 0)| / (1 + s^beta_hat) + 1) ds` on
/// `[0, horizon]` and the driver carried through it.
pub fn growth_normalize(
    driver: &GammaBalancedDriver,
    states: usize,
    m: f64,
    horizon: f64,
    steps: usize,
) -> Result<(TimeChangeMap, GammaBalancedDriver)> {
    if !(m > 1.0) {
        return Err(precondition(format!("growth normalization needs m > 1, got {m}")));
    }
    let grid = Arc::new(TimeGrid::uniform(horizon, steps)?);
    let zero = vec![0.0; states];
    let bh = driver.beta_hat;
    let f = driver.f.clone();
    let weight = move |t: f64| (0..states).map(|x| f(t, x, 0.0, &zero).abs()).fold(0.0, f64::max) / (1.0 + t.powf(bh));
    let n = grid.nodes();
    let alpha: Vec<f64> = (0..n.len())
        .map(|i| {
            let b = if i + 1 < n.len() { n[i + 1] } else { n[i] };
            m * (cell_max(&weight, n[i], b) + 1.0)
        })
        .collect();
    let clock = clock_from_density(grid, alpha)?;
    let out = transform_chain_driver(driver, &clock)?;
    Ok((clock, out))
}
