mod chain;
mod timechange;
mod wiener;

use super::config::{ExperimentConfig, Module};
use super::report::ReportBundle;
use crate::error::Result;

pub(crate) type Runner = fn(&ExperimentConfig, &mut ReportBundle) -> Result<()>;

/// Catalog entry of a registered scenario.
#[derive(Clone, Copy)]
pub struct ScenarioInfo {
    pub id: &'static str,
    pub module: Module,
    pub description: &'static str,
    /// The mathematical statement the scenario exercises.
    pub anchor: &'static str,
    pub(crate) run: Runner,
}

impl std::fmt::Debug for ScenarioInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioInfo")
            .field("id", &self.id)
            .field("module", &self.module)
            .field("description", &self.description)
            .field("anchor", &self.anchor)
            .finish()
    }
}

const fn entry(
    id: &'static str,
    module: Module,
    description: &'static str,
    anchor: &'static str,
    run: Runner,
) -> ScenarioInfo {
    ScenarioInfo {
        id,
        module,
        description,
        anchor,
        run,
    }
}

pub(crate) static REGISTRY: &[ScenarioInfo] = &[
    entry(
        "identity-clock-roundtrip",
        Module::Timechange,
        "unit density clock maps paths and times onto themselves",
        "identity time change leaves every process unchanged",
        timechange::identity_roundtrip,
    ),
    entry(
        "clock-inverse",
        Module::Timechange,
        "generalized inverse of phi for density 1 + 2s against its closed form",
        "right-continuous inverse of the integrated clock",
        timechange::clock_inverse,
    ),
    entry(
        "brownian-variance",
        Module::Timechange,
        "time-changed Brownian motion has unit variance per unit clock time",
        "Levy characterization of the time-changed Brownian motion",
        timechange::brownian_variance,
    ),
    entry(
        "stieltjes-substitution",
        Module::Timechange,
        "substitution residual of a Stieltjes integral and its first-order decay",
        "change of variables for integrals under a time change",
        timechange::substitution,
    ),
    entry(
        "uniform-lipschitz",
        Module::Wiener,
        "randomized stochastic Lipschitz drivers become 1-Lipschitz on the clock",
        "transformed driver is uniformly Lipschitz with constant one",
        wiener::uniform_lipschitz,
    ),
    entry(
        "linear-equivalence",
        Module::Wiener,
        "direct Picard solve against transform, solve and map back",
        "time-changed solution solves the transformed equation",
        wiener::linear_equivalence,
    ),
    entry(
        "lsmc-closed-form",
        Module::Wiener,
        "LSMC Y0 of a linear problem against its closed form",
        "explicit solution of linear equations under the drift-adjusted measure",
        wiener::lsmc_closed_form,
    ),
    entry(
        "comparison",
        Module::Wiener,
        "ordered terminal values give ordered solutions on shared noise",
        "comparison theorem for stochastic Lipschitz drivers",
        wiener::comparison,
    ),
    entry(
        "bounded-solution",
        Module::Wiener,
        "cubic monotone driver keeps |Y| within the terminal bound",
        "existence of a bounded solution for monotone drivers",
        wiener::bounded_solution,
    ),
    entry(
        "stability",
        Module::Wiener,
        "weighted stability estimate for a shifted terminal value",
        "a priori stability estimate in the clock-weighted norm",
        wiener::stability,
    ),
    entry(
        "psi-properties",
        Module::Chain,
        "quadratic-variation matrix psi is symmetric PSD with constant kernel",
        "predictable quadratic variation matrix of the chain martingale",
        chain::psi_properties,
    ),
    entry(
        "chain-transform-law",
        Module::Chain,
        "chain on the clock has the occupancy law of the original chain",
        "rate matrix of the time-changed chain",
        chain::transform_law,
    ),
    entry(
        "message-transmission",
        Module::Chain,
        "reach probability with message loss: BSDE, direct ODE and killed chain",
        "transmission of messages through a lossy network",
        chain::message,
    ),
    entry(
        "chain-bounds",
        Module::Chain,
        "solution bounds in terms of K1 and their growth-normalized variants",
        "existence and uniqueness bound for gamma-balanced drivers",
        chain::bounds,
    ),
    entry(
        "gamma-balance",
        Module::Chain,
        "gamma-balance survives the driver transform with the same gamma",
        "gamma-balanced drivers under time change",
        chain::gamma_balance,
    ),
    entry(
        "chain-cross-scheme",
        Module::Chain,
        "backward-sweep Picard against the Markov ODE on a three-state chain",
        "Markovian solution as a system of ordinary differential equations",
        chain::cross_scheme,
    ),
    entry(
        "martingale-mean",
        Module::Chain,
        "Doob-Meyer martingale of the chain has zero mean",
        "semimartingale decomposition of the chain",
        chain::martingale_mean,
    ),
];
