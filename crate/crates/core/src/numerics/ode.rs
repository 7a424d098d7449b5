use crate::error::{Error, Result};

/// Step-size control for [`integrate_dopri`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// States at the requested output times.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights are the last row of A; E = b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) integration of `y' = f(t, y)` from
/// `times[0]` through each later entry of `times`. The times must be
/// strictly monotone in either direction, so the same routine integrates
/// backward from a terminal condition.
pub fn integrate_dopri(
    f: impl Fn(f64, &[f64], &mut [f64]),
    y0: &[f64],
    times: &[f64],
    opts: OdeOptions,
) -> Result<OdeSolution> {
    let n = y0.len();
    if times.is_empty() {
        return Err(Error::Structure("no output times".into()));
    }
    let dir = if times.len() > 1 && times[1] < times[0] {
        -1.0
    } else {
        1.0
    };
    if times.windows(2).any(|w| !((w[1] - w[0]) * dir > 0.0)) {
        return Err(Error::Structure("output times must be strictly monotone".into()));
    }
    let mut y = y0.to_vec();
    let mut t = times[0];
    let mut out = OdeSolution {
        times: times.to_vec(),
        states: vec![y.clone()],
        accepted: 0,
        rejected: 0,
    };
    let span = (times[times.len() - 1] - times[0]).abs();
    let mut h = (span * 1e-3).max(1e-8);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    f(t, &y, &mut k[0]);
    for &t_out in &times[1..] {
        while (t_out - t) * dir > 0.0 {
            if out.accepted + out.rejected >= opts.max_steps {
                return Err(Error::Invariant(format!(
                    "ODE step budget {} exhausted at t = {t}",
                    opts.max_steps
                )));
            }
            let step = h.min((t_out - t).abs());
            let hs = step * dir;
            for s in 1..7 {
                let (done, rest) = k.split_at_mut(s);
                for i in 0..n {
                    let acc: f64 = done.iter().enumerate().map(|(j, kj)| A[s][j] * kj[i]).sum();
                    tmp[i] = y[i] + hs * acc;
                }
                f(t + C[s] * hs, &tmp, &mut rest[0]);
            }
            y5.copy_from_slice(&tmp);
            // stage 7 is evaluated at the fifth-order solution (FSAL)
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * hs;
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            if err <= 1.0 || step <= 1e-14 * span.max(1.0) {
                t += hs;
                if (t_out - t) * dir <= 1e-14 * span.max(1.0) {
                    t = t_out;
                }
                y.copy_from_slice(&y5);
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
                out.accepted += 1;
            } else {
                out.rejected += 1;
            }
            if !err.is_finite() {
                return Err(Error::Invariant(format!("non-finite ODE state near t = {t}")));
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = step * fac;
        }
        out.states.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_forward() {
        let sol = integrate_dopri(
            |_, y, dy| dy[0] = -y[0],
            &[1.0],
            &[0.0, 1.0, 2.0],
            OdeOptions::default(),
        )
        .unwrap();
        assert!((sol.states[1][0] - (-1f64).exp()).abs() < 1e-9);
        assert!((sol.states[2][0] - (-2f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_from_terminal_value() {
        // y' = t, y(1) = 0  =>  y(0) = -1/2
        let sol = integrate_dopri(|t, _, dy| dy[0] = t, &[0.0], &[1.0, 0.0], OdeOptions::default()).unwrap();
        assert!((sol.states[1][0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn oscillator_system() {
        let sol = integrate_dopri(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[0.0, 1.0],
            &[0.0, std::f64::consts::PI],
            OdeOptions::default(),
        )
        .unwrap();
        assert!(sol.states[1][0].abs() < 1e-8);
        assert!((sol.states[1][1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_non_monotone_times() {
        let r = integrate_dopri(|_, _, dy| dy[0] = 0.0, &[0.0], &[0.0, 1.0, 0.5], OdeOptions::default());
        assert!(r.is_err());
    }
}
