use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::brownian::{transform_brownian, BrownianEnsemble};
use super::problem::{BsdeInstance, DriverFn, DriverPoint, WienerBSDEProblem};
use crate::error::{structure, Result};
use crate::timechange::TimeChangeMap;

/// A problem moved to clock time: `f~(s, y, z) = f(phi^{-1}(s), y, z D^{-1/2}) D`
/// with `D = (phi^{-1})'(s)`.
#[derive(Clone)]
pub struct TransformedProblem {
    pub base: WienerBSDEProblem,
    pub clock: Arc<TimeChangeMap>,
    pub driver: DriverFn,
}

/// Builds `f~` for `problem` under `clock`; the clock's density must be the
/// problem's `alpha^2`.
pub fn transform_driver(problem: &WienerBSDEProblem, clock: &TimeChangeMap) -> Result<TransformedProblem> {
    problem.validate()?;
    let a = &problem.coeffs.alpha_sq;
    if !clock.source_grid().same_as(&problem.grid) || clock.density().values() != a.values() {
        return Err(structure("clock was not built from this problem's alpha^2"));
    }
    let clock = Arc::new(clock.clone());
    let base = problem.driver.clone();
    let c = clock.clone();
    let k = problem.k;
    let driver: DriverFn = Arc::new(move |pt: &DriverPoint, y: &[f64], z: &[f64], out: &mut [f64]| {
        let t = c.phi_inv(pt.t);
        let dd = c.phi_inv_derivative(pt.t);
        let zs: Vec<f64> = z.iter().map(|v| v / dd.sqrt()).collect();
        let inner = DriverPoint { t, ..*pt };
        base(&inner, y, &zs, out);
        for o in out.iter_mut().take(k) {
            *o *= dd;
        }
    });
    Ok(TransformedProblem {
        base: problem.clone(),
        clock,
        driver,
    })
}

impl TransformedProblem {
    /// Discretization in clock time on the image grid `phi(t_i)`, driven by
    /// the time-changed noise of `w`. Stop nodes carry over index-for-index,
    /// which realizes `tau~ = phi(tau)`.
    pub fn instance(&self, w: &BrownianEnsemble) -> Result<BsdeInstance> {
        let image = self.clock.image_grid()?;
        if !self.clock.target_grid().same_as(&image) {
            return Err(structure(
                "transformed solves need the clock targeted at its image grid",
            ));
        }
        let orig = BsdeInstance::original(&self.base, w)?;
        let noise = transform_brownian(w, &self.clock)?;
        let n = image.steps();
        Ok(BsdeInstance {
            grid: noise.grid().clone(),
            driver: self.driver.clone(),
            noise,
            lipschitz: vec![1.0; n],
            ..orig
        })
    }

    /// `tau~ = phi(tau)` per path, for the stop nodes of `instance`.
    pub fn stop_times(&self, instance: &BsdeInstance) -> Vec<f64> {
        instance
            .stop_index
            .iter()
            .map(|&j| self.clock.phi(self.base.grid.nodes()[j]))
            .collect()
    }
}

/// Box the random probes are drawn from: `t` in `[0, horizon]`, entries of
/// `y` and `z` in `[-y, y]` and `[-z, z]`.
#[derive(Debug, Clone, Copy)]
pub struct ProbeBox {
    pub horizon: f64,
    pub y: f64,
    pub z: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct Prober {
    rng: ChaCha8Rng,
    bx: ProbeBox,
    k: usize,
    d: usize,
}

impl Prober {
    fn new(bx: ProbeBox, k: usize, d: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bx,
            k,
            d,
        }
    }

    fn time(&mut self) -> f64 {
        self.rng.random_range(0.0..=self.bx.horizon)
    }

    fn ys(&mut self) -> Vec<f64> {
        let b = self.bx.y;
        (0..self.k).map(|_| self.rng.random_range(-b..=b)).collect()
    }

    fn zs(&mut self) -> Vec<f64> {
        let b = self.bx.z;
        (0..self.k * self.d).map(|_| self.rng.random_range(-b..=b)).collect()
    }
}

fn eval(driver: &DriverFn, t: f64, state: &[f64], y: &[f64], z: &[f64], k: usize) -> Vec<f64> {
    let pt = DriverPoint {
        path: 0,
        node: 0,
        t,
        state,
    };
    let mut out = vec![0.0; k];
    driver(&pt, y, z, &mut out);
    out
}

/// Largest observed `|f(t,y,z) - f(t,y',z')| / (|y - y'| + |z - z'|)` over
/// random probes (state fixed at the origin). Zero denominators are skipped.
pub fn check_uniform_lipschitz(driver: &DriverFn, k: usize, d: usize, probes: usize, bx: ProbeBox, seed: u64) -> f64 {
    let mut pr = Prober::new(bx, k, d, seed);
    let state = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let t = pr.time();
        let (y1, z1, y2, z2) = (pr.ys(), pr.zs(), pr.ys(), pr.zs());
        let den = diff_norm(&y1, &y2) + diff_norm(&z1, &z2);
        if den == 0.0 {
            continue;
        }
        let a = eval(driver, t, &state, &y1, &z1, k);
        let b = eval(driver, t, &state, &y2, &z2, k);
        worst = worst.max(diff_norm(&a, &b) / den);
    }
    worst
}

/// Observed constants of a monotone-mode driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneProbe {
    /// max `<y - y', f(y,z) - f(y',z)> / |y - y'|^2` (the negated `r`, bounded by `r^-`)
    pub monotonicity: f64,
    /// max `(|f(y,z)| - |f(0,z)|) / (|y| + l')`
    pub growth: f64,
    /// max `|f(y,z) - f(y,z')| / |z - z'|`
    pub z_lipschitz: f64,
}

/// Probes the three monotone-mode inequalities; for a transformed driver
/// all three come out at most 1.
pub fn probe_monotone(
    driver: &DriverFn,
    k: usize,
    d: usize,
    l_prime: u8,
    probes: usize,
    bx: ProbeBox,
    seed: u64,
) -> MonotoneProbe {
    let mut pr = Prober::new(bx, k, d, seed);
    let state = vec![0.0; d];
    let zero = vec![0.0; k];
    let mut out = MonotoneProbe {
        monotonicity: f64::NEG_INFINITY,
        growth: f64::NEG_INFINITY,
        z_lipschitz: 0.0,
    };
    for _ in 0..probes {
        let t = pr.time();
        let (y1, y2, z1, z2) = (pr.ys(), pr.ys(), pr.zs(), pr.zs());
        let dy = diff_norm(&y1, &y2);
        let f1 = eval(driver, t, &state, &y1, &z1, k);
        if dy > 0.0 {
            let f2 = eval(driver, t, &state, &y2, &z1, k);
            let ip: f64 = (0..k).map(|i| (y1[i] - y2[i]) * (f1[i] - f2[i])).sum();
            out.monotonicity = out.monotonicity.max(ip / (dy * dy));
        }
        let den = norm(&y1) + l_prime as f64;
        if den > 0.0 {
            let f0 = eval(driver, t, &state, &zero, &z1, k);
            out.growth = out.growth.max((norm(&f1) - norm(&f0)) / den);
        }
        let dz = diff_norm(&z1, &z2);
        if dz > 0.0 {
            let f3 = eval(driver, t, &state, &y1, &z2, k);
            out.z_lipschitz = out.z_lipschitz.max(diff_norm(&f1, &f3) / dz);
        }
    }
    out
}
