use std::sync::Arc;

use super::clock::TimeChangeMap;
use super::grid::TimeGrid;
use super::path::{IncreasingProcess, Interp, SampledPath};
use crate::error::{Error, Result};

/// The bounded clock `Phi(t) = t / (1 + tau ^ t)` that maps a random
/// terminal time `tau` to `Phi(tau) < 1`.
#[derive(Debug, Clone)]
pub struct TerminalClock {
    tau: f64,
    map: Option<TimeChangeMap>,
}

impl TerminalClock {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi(&self, t: f64) -> f64 {
        t / (1.0 + self.tau.min(t))
    }

    /// Transformed horizon `Phi(tau)`.
    pub fn horizon(&self) -> f64 {
        self.phi(self.tau)
    }

    /// `Phi^{-1}(t) = t / (1 - t)` on `[0, 1)`.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(t / (1.0 - t))
    }

    /// `(Phi^{-1})'(t) = (1 - t)^{-2}` on `[0, 1)`.
    pub fn inverse_derivative(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok((1.0 - t).powi(-2))
    }

    fn check(t: f64) -> Result<()> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Domain(format!(
                "inverse of t/(1+t) requested at t = {t}, outside [0, 1)"
            )));
        }
        Ok(())
    }

    /// Sampled clock on `[0, tau]`; `None` when `tau = 0`.
    pub fn map(&self) -> Option<&TimeChangeMap> {
        self.map.as_ref()
    }
}

/// Builds [`TerminalClock`] for one path's terminal time, sampled with
/// `steps` intervals on `[0, tau]`.
pub fn normalize_terminal_time(tau: f64, steps: usize) -> Result<TerminalClock> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "terminal time must be finite and >= 0, got {tau}"
        )));
    }
    let map = if tau > 0.0 {
        let g = Arc::new(TimeGrid::uniform(tau, steps)?);
        let fwd = SampledPath::from_fn(g.clone(), Interp::Linear, |t| t / (1.0 + t));
        // Phi' = (1+t)^{-2} is a density against v = t
        let dens = SampledPath::from_fn(g.clone(), Interp::Linear, |t| (1.0 + t).powi(-2));
        let forward = IncreasingProcess::new(fwd, 0.0)?;
        let target = TimeGrid::from_nodes(forward.path().values().to_vec())?;
        Some(TimeChangeMap::from_parts(
            forward,
            dens,
            IncreasingProcess::identity(g),
            &target,
        ))
    } else {
        None
    };
    Ok(TerminalClock { tau, map })
}
