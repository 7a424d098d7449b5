//! Sampled increasing processes, the clock `phi = int alpha^2 dv`, its
//! generalized inverse and time-changed paths.
//!
//! Everything lives on finite grids. Continuous-time identities (e.g.
//! `phi(phi^{-1}(t)) = t` or the substitution rule for Stieltjes integrals)
//! become statements that hold up to discretization error, with the default
//! slack `10 * max step` of the relevant grid.

mod clock;
mod coeffs;
mod grid;
mod path;
mod terminal;

pub use clock::{
    build_phi, build_phi_on_image, generalized_inverse, substitution_check, time_change_path, ClockSet, Direction,
    TimeChangeMap,
};
pub use coeffs::{AlphaRule, CoefficientProcesses};
pub use grid::{StepPolicy, TimeGrid};
pub use path::{integrate_stieltjes, IncreasingProcess, Interp, SampledPath};
pub use terminal::{normalize_terminal_time, TerminalClock};

#[cfg(test)]
mod tests;
