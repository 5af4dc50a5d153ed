//! Dormand–Prince 5(4) integrator with adaptive step size.

use crate::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local error tolerance, relative to the largest solution component.
    pub tol: f64,
    /// Initial step magnitude; defaults to 1% of the interval.
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            h0: None,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

fn max_abs<const D: usize>(y: &[f64; D]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) and returns
/// `y(t1)`.
pub fn integrate<const D: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    opts: &OdeOptions,
) -> Result<([f64; D], OdeStats)>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let span = t1 - t0;
    let mut stats = OdeStats {
        accepted: 0,
        rejected: 0,
    };
    if span == 0.0 {
        return Ok((y0, stats));
    }
    let dir = span.signum();
    let mut h = opts.h0.unwrap_or(0.01 * span.abs()).min(span.abs()) * dir;
    let mut t = t0;
    let mut y = y0;
    let mut k = [[0.0; D]; 7];
    k[0] = f(t, &y);

    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..D {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = y;
        let mut err = [0.0; D];
        for i in 0..D {
            let mut incr = 0.0;
            let mut e = 0.0;
            for s in 0..6 {
                incr += A[6][s] * k[s][i];
            }
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            y_new[i] += h * incr;
            err[i] = h * e;
        }
        let scale = opts.tol * max_abs(&y).max(max_abs(&y_new)).max(f64::MIN_POSITIVE);
        let err_norm = max_abs(&err) / scale;

        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            // FSAL: the last stage is f(t + h, y_new).
            k[0] = k[6];
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if !err_norm.is_finite() {
            0.2
        } else if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() <= 1e-14 * t.abs().max(1e-300) {
            return Err(Error::StepUnderflow { t, h });
        }
    }
    Ok((y, stats))
}
