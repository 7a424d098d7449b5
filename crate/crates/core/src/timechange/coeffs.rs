use super::path::SampledPath;
use crate::error::{invariant, structure, Result};

/// Which lower envelope `alpha^2` is required to dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaRule {
    /// `alpha^2 >= max(r, u^2)`.
    Lipschitz,
    /// `alpha^2 >= max(r^-, l, u^2)` for monotone drivers with growth coefficient `l`.
    Monotone,
    /// `alpha^2 = u^2 + 1`, used for monotone-decreasing drivers with a bounded solution.
    UnitPlusZ,
    /// Only the floor is checked.
    Custom,
}

/// Stochastic Lipschitz data of a driver along one path.
#[derive(Debug, Clone)]
pub struct CoefficientProcesses {
    pub r: SampledPath,
    pub u: SampledPath,
    pub l: Option<SampledPath>,
    pub alpha_sq: SampledPath,
    pub eps: f64,
    pub rule: AlphaRule,
}

const SLACK: f64 = 1e-12;

impl CoefficientProcesses {
    /// `alpha^2 = max(r, u^2)`, nodewise.
    pub fn lipschitz(r: SampledPath, u: SampledPath, eps: f64) -> Result<Self> {
        let a: Vec<f64> = r.values().iter().zip(u.values()).map(|(&r, &u)| r.max(u * u)).collect();
        let alpha_sq = r.with_values(a, r.interp());
        Self::checked(r, u, None, alpha_sq, eps, AlphaRule::Lipschitz)
    }

    /// `alpha^2 = max(r, u^2, eps)`, nodewise: the Lipschitz envelope lifted
    /// to the floor where it would fall below it.
    pub fn lipschitz_floored(r: SampledPath, u: SampledPath, eps: f64) -> Result<Self> {
        let a: Vec<f64> = r
            .values()
            .iter()
            .zip(u.values())
            .map(|(&r, &u)| r.max(u * u).max(eps))
            .collect();
        let alpha_sq = r.with_values(a, r.interp());
        Self::checked(r, u, None, alpha_sq, eps, AlphaRule::Lipschitz)
    }

    /// `alpha^2 = max(r^-, l, u^2)`, nodewise.
    pub fn monotone(r: SampledPath, l: SampledPath, u: SampledPath, eps: f64) -> Result<Self> {
        let a: Vec<f64> = (0..r.values().len())
            .map(|i| {
                let rm = (-r.values()[i]).max(0.0);
                rm.max(l.values()[i]).max(u.values()[i].powi(2))
            })
            .collect();
        let alpha_sq = r.with_values(a, r.interp());
        Self::checked(r, u, Some(l), alpha_sq, eps, AlphaRule::Monotone)
    }

    /// `alpha^2 = u^2 + 1`; `r` is identically zero.
    pub fn unit_plus_z(u: SampledPath) -> Result<Self> {
        let a: Vec<f64> = u.values().iter().map(|&u| u * u + 1.0).collect();
        let alpha_sq = u.with_values(a, u.interp());
        let r = u.with_values(vec![0.0; u.values().len()], u.interp());
        Self::checked(r, u, None, alpha_sq, 1.0, AlphaRule::UnitPlusZ)
    }

    /// Caller-supplied `alpha^2`; only `alpha^2 >= eps` is enforced.
    pub fn custom(r: SampledPath, u: SampledPath, alpha_sq: SampledPath, eps: f64) -> Result<Self> {
        Self::checked(r, u, None, alpha_sq, eps, AlphaRule::Custom)
    }

    fn checked(
        r: SampledPath,
        u: SampledPath,
        l: Option<SampledPath>,
        alpha_sq: SampledPath,
        eps: f64,
        rule: AlphaRule,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invariant(format!("floor eps must be positive, got {eps}")));
        }
        let g = alpha_sq.grid();
        if !r.grid().same_as(g) || !u.grid().same_as(g) || l.as_ref().is_some_and(|l| !l.grid().same_as(g)) {
            return Err(structure("coefficient paths must share one grid"));
        }
        for (i, &a) in alpha_sq.values().iter().enumerate() {
            if !(a >= eps) {
                return Err(invariant(format!("alpha^2 = {a} below eps = {eps} at node {i}")));
            }
            let rv = r.values()[i];
            let uv = u.values()[i];
            let need = match rule {
                AlphaRule::Lipschitz => rv.max(uv * uv),
                AlphaRule::Monotone => {
                    let lv = l.as_ref().map_or(0.0, |l| l.values()[i]);
                    (-rv).max(0.0).max(lv).max(uv * uv)
                }
                AlphaRule::UnitPlusZ => uv * uv + 1.0,
                AlphaRule::Custom => eps,
            };
            if a < need * (1.0 - SLACK) - SLACK {
                return Err(invariant(format!(
                    "alpha^2 = {a} does not dominate {need} at node {i} ({rule:?})"
                )));
            }
        }
        Ok(Self {
            r,
            u,
            l,
            alpha_sq,
            eps,
            rule,
        })
    }
}
