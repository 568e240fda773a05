//! Shooting oracle: integrates the impulsive ODE directly, with no use of the
//! variational machinery.
//!
//! Starting from `u(0) = 0`, `u'(0) = s`, each subinterval is integrated with
//! an adaptive Runge–Kutta pair that never steps across a node; at `x_j` the
//! slope drops by `ı_j(u(x_j))`. Roots of `s ↦ u(1; s)` are solutions.

mod fd;
mod integrator;
mod residual;

pub use integrator::{integrate, Tolerance};
pub use residual::{
    sample_shot, solution_grid, verify_expansion, verify_function, verify_samples,
    verify_trajectory, ResidualReport, SampledSolution, ODE_POINTS_PER_SUBINTERVAL,
    WEAK_TEST_MODES,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::galerkin::ProblemSpec;
use crate::mesh::ImpulseMesh;

pub const DEFAULT_INTEGRATOR_TOL: f64 = 1e-12;

/// Terminal value `u(1)` of the linear impulsive problem `-u'' = 0`,
/// `u'(x_j+) = u'(x_j-) - b_j u(x_j)`, started with `u(0) = 0`, `u'(0) = 1`.
///
/// Vanishes exactly when `b` lies in the resonance set.
pub fn linear_transfer(mesh: &ImpulseMesh, b: &[f64]) -> Result<f64> {
    check_len("b", mesh.node_count(), b.len())?;
    let mut u = 0.0;
    let mut slope = 1.0;
    let lengths = mesh.lengths();
    for (len, bj) in lengths.iter().zip(b) {
        u += slope * len;
        slope -= bj * u;
    }
    Ok(u + slope * lengths[lengths.len() - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub x: f64,
    pub u: f64,
    pub slope_before: f64,
    pub slope_after: f64,
}

/// Accepted integrator states, one segment per subinterval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
    pub dus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_slope: f64,
    pub segments: Vec<Segment>,
    pub jumps: Vec<Jump>,
}

impl Trajectory {
    pub fn terminal_value(&self) -> f64 {
        *self
            .segments
            .last()
            .and_then(|s| s.us.last())
            .unwrap_or(&0.0)
    }

    pub fn node_values(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.u).collect()
    }

    /// Cubic Hermite interpolation between accepted steps.
    pub fn eval(&self, x: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| x <= *s.xs.last().unwrap())
            .unwrap_or_else(|| self.segments.last().unwrap());
        let i = seg
            .xs
            .partition_point(|&p| p <= x)
            .clamp(1, seg.xs.len() - 1);
        let (x0, x1) = (seg.xs[i - 1], seg.xs[i]);
        let h = x1 - x0;
        if h <= 0.0 {
            return seg.us[i];
        }
        let t = ((x - x0) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * seg.us[i - 1]
            + (t3 - 2.0 * t2 + t) * h * seg.dus[i - 1]
            + (-2.0 * t3 + 3.0 * t2) * seg.us[i]
            + (t3 - t2) * h * seg.dus[i]
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "integrator_tol",
            value: tol,
            reason: "must be positive",
        })
    }
}

/// Integrates the impulsive IVP with initial slope `initial_slope`.
pub fn shoot(problem: &ProblemSpec, initial_slope: f64, integrator_tol: f64) -> Result<Trajectory> {
    let mesh = problem.mesh();
    let ends: Vec<Vec<f64>> = (0..mesh.subinterval_count())
        .map(|j| vec![mesh.subinterval(j).1])
        .collect();
    shoot_through(problem, initial_slope, integrator_tol, &ends, true)
}

/// Integrates with hard stops at `stops[j]` inside subinterval `j` (each list
/// ascending and ending at the right node), recording the states there.
/// With `trace` every accepted step is recorded as well.
pub(crate) fn shoot_through(
    problem: &ProblemSpec,
    initial_slope: f64,
    integrator_tol: f64,
    stops: &[Vec<f64>],
    trace: bool,
) -> Result<Trajectory> {
    check_tol(integrator_tol)?;
    let mesh = problem.mesh();
    let m = mesh.node_count();
    let mut state = [0.0, initial_slope];
    let mut segments = Vec::with_capacity(m + 1);
    let mut jumps = Vec::with_capacity(m);
    for (j, stops_j) in stops.iter().enumerate() {
        let (left, _) = mesh.subinterval(j);
        let rhs = |_x: f64, y: &[f64; 2]| [y[1], -problem.f(j, y[0])];
        let mut seg = Segment {
            xs: vec![left],
            us: vec![state[0]],
            dus: vec![state[1]],
        };
        if trace {
            let mut steps = Vec::new();
            integrate(
                rhs,
                left,
                state,
                stops_j,
                Tolerance(integrator_tol),
                Some(&mut steps),
            )?;
            seg = Segment {
                xs: steps.iter().map(|s| s.0).collect(),
                us: steps.iter().map(|s| s.1[0]).collect(),
                dus: steps.iter().map(|s| s.1[1]).collect(),
            };
        } else {
            let states = integrate(rhs, left, state, stops_j, Tolerance(integrator_tol), None)?;
            for (x, s) in stops_j.iter().zip(&states) {
                seg.xs.push(*x);
                seg.us.push(s[0]);
                seg.dus.push(s[1]);
            }
        }
        state = [*seg.us.last().unwrap(), *seg.dus.last().unwrap()];
        if j < m {
            let x = mesh.points()[j];
            let slope_after = state[1] - problem.impulse(j, state[0]);
            jumps.push(Jump {
                x,
                u: state[0],
                slope_before: state[1],
                slope_after,
            });
            state[1] = slope_after;
        }
        segments.push(seg);
    }
    Ok(Trajectory {
        initial_slope,
        segments,
        jumps,
    })
}

/// `u(1; s)` and `∂u(1)/∂s` from the variational equation.
pub fn shooting_map_with_derivative(
    problem: &ProblemSpec,
    slope: f64,
    integrator_tol: f64,
) -> Result<(f64, f64)> {
    check_tol(integrator_tol)?;
    let mesh = problem.mesh();
    let m = mesh.node_count();
    let mut state = [0.0, slope, 0.0, 1.0];
    for j in 0..=m {
        let (left, right) = mesh.subinterval(j);
        let rhs = |_x: f64, y: &[f64; 4]| {
            let ft = problem.f_t(j, y[0]).unwrap_or(f64::NAN);
            [y[1], -problem.f(j, y[0]), y[3], -ft * y[2]]
        };
        state = integrate(rhs, left, state, &[right], Tolerance(integrator_tol), None)?[0];
        if j < m {
            let di = problem.impulse_derivative(j, state[0]).unwrap_or(f64::NAN);
            state[1] -= problem.impulse(j, state[0]);
            state[3] -= di * state[2];
        }
    }
    Ok((state[0], state[2]))
}

/// Evaluates `u(1; s)` on a grid over `slope_range`, bisects every sign change
/// to width `tol` and returns one trajectory per root (roots closer than
/// `10 tol` merged).
pub fn bisect_solutions(
    problem: &ProblemSpec,
    slope_range: (f64, f64),
    grid: usize,
    tol: f64,
) -> Result<Vec<Trajectory>> {
    let (lo, hi) = slope_range;
    if grid < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Domain {
            name: "grid",
            value: grid as f64,
            reason: "need grid >= 2 over a nonempty range",
        });
    }
    let itol = DEFAULT_INTEGRATOR_TOL;
    let map = |s: f64| shoot(problem, s, itol).map(|t| t.terminal_value());
    let slopes: Vec<f64> = (0..=grid)
        .map(|i| lo + (hi - lo) * i as f64 / grid as f64)
        .collect();
    let values: Vec<f64> = slopes.iter().map(|&s| map(s)).collect::<Result<_>>()?;

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..slopes.len() {
        if values[i] == 0.0 {
            roots.push(slopes[i]);
            continue;
        }
        if i + 1 < slopes.len()
            && values[i + 1] != 0.0
            && values[i].signum() != values[i + 1].signum()
        {
            let (mut a, mut b) = (slopes[i], slopes[i + 1]);
            let mut fa = values[i];
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = map(mid)?;
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|b, a| (*b - *a).abs() < 10.0 * tol);
    roots.into_iter().map(|s| shoot(problem, s, itol)).collect()
}

/// Newton iteration on the shooting map from `slope`, with the derivative
/// from the variational equation; `None` if it fails to converge.
pub fn refine_slope(
    problem: &ProblemSpec,
    slope: f64,
    integrator_tol: f64,
    max_iters: usize,
) -> Result<Option<f64>> {
    let mut s = slope;
    let scale = slope.abs().max(1.0);
    for _ in 0..max_iters {
        let (value, deriv) = match shooting_map_with_derivative(problem, s, integrator_tol) {
            Ok(v) => v,
            Err(Error::StepSizeUnderflow { .. } | Error::NonFinite { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !deriv.is_finite() || deriv == 0.0 {
            return Ok(None);
        }
        let step = value / deriv;
        // damp steps larger than the scale of the initial guess
        let step = step.clamp(-0.5 * scale, 0.5 * scale);
        s -= step;
        if step.abs() <= 1e-14 * s.abs().max(1.0) {
            return Ok(Some(s));
        }
    }
    Ok(None)
}
