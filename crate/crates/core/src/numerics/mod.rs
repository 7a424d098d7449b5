//! Numerical building blocks shared by the solvers: regression for
//! conditional expectations, an adaptive ODE integrator, Gauss-Legendre
//! quadrature and Monte Carlo summary statistics.

mod ode;
mod quadrature;
mod regression;
mod stats;

pub use ode::{integrate_dopri, OdeOptions, OdeSolution};
pub use quadrature::{gauss_legendre, integrate_gl};
pub use regression::{Basis, Fit, Regressor};
pub use stats::{mean, mean_se, std_dev, Summary};
