//! Markov-chain BSDEs on `{e_1, ..., e_N}` stopped at a hitting time.
//!
//! Convention: `A_ij(t)` is the rate `j -> i` (columns sum to zero),
//! `dX = A X dt + dM`, and
//! `Y_t = xi + int_t^tau f(u, X_{u-}, Y_u, Z_u) du - int_t^tau Z_u dM_u`.
//! For a Markovian problem `Y_t = u(t, X_t)` and `Z_t = u(t, .)`.

mod config;
mod driver;
mod martingale;
mod message;
mod model;
mod solve;

pub use config::{load_chain_config, ChainConfig};
pub use driver::{
    chain_clock, check_gamma_balanced, growth_normalize, transform_chain, transform_chain_driver, ChainDriverFn, EtaFn,
    GammaBalancedDriver, GammaReport, TimeFn,
};
pub use martingale::{doob_meyer_martingale, martingale_at, min_eigenvalue, psi_at, psi_matrix, semi_norm};
pub use message::{
    exp_moment, message_transmission, validate_k_functions, verify_bound, BoundReport, BoundVariant, KReport,
    MessageReport, MessageSettings,
};
pub use model::{
    occupancy, simulate_chain, simulate_killed, validate_generator, ChainPath, KilledOutcome, MarkovChainModel, RateFn,
    RateProfile,
};
pub use solve::{solve_chain_bsde, ChainBSDEProblem, ChainScheme, ChainSolution, TerminalFn};

#[cfg(test)]
mod tests;
