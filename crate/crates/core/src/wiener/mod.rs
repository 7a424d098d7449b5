//! Brownian BSDEs `Y_t = xi + int_t^tau f(s, Y, Z) ds + int_t^tau Z dW`,
//! their time change by `phi = int alpha^2 ds`, and backward solvers.
//!
//! Sign convention: the martingale term enters with a plus sign, so the
//! discrete `Z` is `-E[Y_{j+1} dW_j | F_j] / dt_j`. The Picard oracle and the
//! closed form for linear drivers agree on this convention (see the tests).
//!
//! Transformed problems are solved on the image grid `phi(t_i)`. On that
//! grid `dW~_j = alpha_j dW_j` exactly, node `j` of the transformed problem
//! is node `j` of the original one, and the regression state is the
//! original Brownian level, which is adapted to the time-changed filtration.

mod brownian;
mod closed_form;
mod experiments;
mod lsmc;
mod mapping;
mod norms;
mod picard;
mod problem;
mod transform;

pub use brownian::{simulate_brownian, transform_brownian, BrownianEnsemble};
pub use closed_form::closed_form_linear;
pub use experiments::{bounded_solution_check, comparison_experiment, BoundedReport, ComparisonReport};
pub use lsmc::solve_lsmc;
pub use mapping::map_solution;
pub use norms::{stability_gap, weighted_norms, StabilityReport, WeightedNormReport};
pub use picard::solve_picard_oracle;
pub use problem::{BsdeInstance, DriverFn, DriverMode, DriverPoint, Payoff, PayoffFn, TerminalRule, WienerBSDEProblem};
pub use transform::{
    check_uniform_lipschitz, probe_monotone, transform_driver, MonotoneProbe, ProbeBox, TransformedProblem,
};
