//! Dormand–Prince 5(4) with adaptive steps and hard stops at requested points.

use crate::error::{Error, Result};

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 2_000_000;

/// Step-size controller settings; error per component is measured against
/// `tol * (1 + |y|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance(pub f64);

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = rhs(x, y)` from `x0` through every point of `stops`
/// (ascending, last one is the end), returning the state at each stop plus
/// every accepted step in `trace` when given.
pub fn integrate<const N: usize, F>(
    rhs: F,
    x0: f64,
    y0: [f64; N],
    stops: &[f64],
    tol: Tolerance,
    mut trace: Option<&mut Vec<(f64, [f64; N])>>,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut x = x0;
    let mut y = y0;
    let mut out = Vec::with_capacity(stops.len());
    let total = stops.last().map_or(0.0, |e| e - x0);
    let mut h = (total.abs() * 1e-2).max(1e-6).min(total.abs());
    let mut k1 = rhs(x, &y);
    let mut steps = 0usize;
    if let Some(t) = trace.as_deref_mut() {
        t.push((x, y));
    }
    for &stop in stops {
        while x < stop {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::StepSizeUnderflow { x });
            }
            let remaining = stop - x;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-14 * x.abs().max(1.0) && !last {
                return Err(Error::StepSizeUnderflow { x });
            }
            let k2 = rhs(x + C2 * step, &combine(&y, step, &[(A21, &k1)]));
            let k3 = rhs(x + C3 * step, &combine(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                x + C4 * step,
                &combine(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                x + C5 * step,
                &combine(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                x + step,
                &combine(
                    &y,
                    step,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = combine(
                &y,
                step,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = rhs(x + step, &y_new);
            let mut err = 0.0_f64;
            for i in 0..N {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol.0 * (1.0 + y[i].abs().max(y_new[i].abs()));
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if step < 1e-14 * x.abs().max(1.0) {
                    return Err(Error::NonFinite { x });
                }
                h = step * MIN_FACTOR;
                continue;
            }
            if err <= 1.0 {
                x = if last { stop } else { x + step };
                y = y_new;
                k1 = k7;
                if let Some(t) = trace.as_deref_mut() {
                    t.push((x, y));
                }
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                // keep the step proposal when the stop truncated it
                h = if last {
                    h.max(step * factor)
                } else {
                    step * factor
                };
            } else {
                h = step * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
        out.push(y);
    }
    Ok(out)
}
