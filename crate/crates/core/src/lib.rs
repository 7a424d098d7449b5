//! Random time change for backward stochastic differential equations.
//!
//! A driver with stochastic Lipschitz coefficients `r_t`, `u_t` is turned into
//! a uniformly Lipschitz driver by running the equation on the clock
//! `phi(t) = int_0^t alpha^2 dv`, `alpha^2 = max(r, u^2)`. The terminal time
//! becomes the stopping time `phi(tau)`. This crate provides
//!
//! * [`timechange`]: grids, sampled paths, the clock, its generalized inverse
//!   and the integral-substitution identities;
//! * [`wiener`]: Brownian-driven BSDEs, the driver/noise transforms, an LSMC
//!   solver, a Picard oracle, the closed-form linear case and the stability,
//!   comparison and boundedness experiments;
//! * [`chain`]: continuous-time Markov chain BSDEs with hitting-time horizons,
//!   gamma-balanced drivers and the message-transmission model;
//! * [`harness`]: scenarios, reports, seed sweeps and config loading used by
//!   the `tcbsde` binary and the acceptance tests.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod solution;
pub mod timechange;
pub mod wiener;

pub use error::{Error, Result};
