use super::problem::Payoff;
use crate::error::{Error, Result};
use crate::timechange::{Interp, SampledPath};

fn integral(x: &SampledPath) -> f64 {
    let (g, v) = (x.grid(), x.values());
    (0..g.steps())
        .map(|i| match x.interp() {
            Interp::StepLeft => v[i] * g.step(i),
            Interp::Linear => 0.5 * (v[i] + v[i + 1]) * g.step(i),
        })
        .sum()
}

/// `E[X^0..X^n]` for `X ~ N(mu, var)`.
fn gaussian_moments(mu: f64, var: f64, n: usize) -> Vec<f64> {
    let mut m = vec![1.0, mu];
    for j in 2..=n {
        m.push(mu * m[j - 1] + (j - 1) as f64 * var * m[j - 2]);
    }
    m.truncate(n + 1);
    m
}

/// `Y_0` of the scalar linear BSDE with driver `f = r_t y + u_t z`, `d = 1`
/// and terminal value `xi = g(W_T)`.
///
/// With `Y_t = xi + int_t^T f ds + int_t^T Z dW`, the process
/// `exp(int_0^t r) Y_t` has dynamics `-exp(int_0^t r) Z (dW + u dt)`, so under
/// the measure making `W + int u` a Brownian motion it is a martingale and
/// `Y_0 = exp(int_0^T r) E[g(W_T)]` with `W_T ~ N(-int_0^T u, T)`.
/// Constant and polynomial payoffs are supported.
pub fn closed_form_linear(r: &SampledPath, u: &SampledPath, payoff: &Payoff) -> Result<f64> {
    let horizon = r.grid().horizon();
    if (u.grid().horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Structure("r and u cover different horizons".into()));
    }
    let discount = integral(r).exp();
    let mu = -integral(u);
    let expectation = match payoff {
        Payoff::Constant(c) if c.len() == 1 => c[0],
        Payoff::Polynomial { coord: 0, coeffs } => {
            let m = gaussian_moments(mu, horizon, coeffs.len().max(1) - 1);
            coeffs.iter().zip(&m).map(|(c, m)| c * m).sum()
        }
        other => return Err(Error::Unsupported(format!("no closed form for payoff {other:?}"))),
    };
    Ok(discount * expectation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timechange::TimeGrid;
    use std::sync::Arc;

    fn flat(c: f64) -> SampledPath {
        SampledPath::constant(Arc::new(TimeGrid::uniform(1.0, 10).unwrap()), c)
    }

    #[test]
    fn trivial_cases() {
        let one = Payoff::Constant(vec![1.0]);
        assert_eq!(closed_form_linear(&flat(0.0), &flat(0.0), &one).unwrap(), 1.0);
        let sq = Payoff::Polynomial {
            coord: 0,
            coeffs: vec![0.0, 0.0, 1.0],
        };
        assert!((closed_form_linear(&flat(0.0), &flat(0.0), &sq).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discount_has_positive_exponent() {
        let one = Payoff::Constant(vec![1.0]);
        let y0 = closed_form_linear(&flat(0.1), &flat(0.0), &one).unwrap();
        assert!((y0 - 0.1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn drift_shifts_the_mean() {
        // E[W] under W ~ N(-0.5, 1)
        let lin = Payoff::Polynomial {
            coord: 0,
            coeffs: vec![0.0, 1.0],
        };
        let y0 = closed_form_linear(&flat(0.0), &flat(0.5), &lin).unwrap();
        assert!((y0 + 0.5).abs() < 1e-14);
        // fourth moment of N(0, 1) is 3
        assert_eq!(gaussian_moments(0.0, 1.0, 4), vec![1.0, 0.0, 1.0, 0.0, 3.0]);
    }

    #[test]
    fn unsupported_payoff() {
        let p = Payoff::Sign { coord: 0 };
        assert!(matches!(
            closed_form_linear(&flat(0.0), &flat(0.0), &p),
            Err(Error::Unsupported(_))
        ));
    }
}
