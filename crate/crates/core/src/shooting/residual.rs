//! Residual checks of candidate solutions against the strong and weak forms.

use serde::{Deserialize, Serialize};

use super::fd;
use super::{shoot_through, Trajectory, DEFAULT_INTEGRATOR_TOL};
use crate::error::{Error, Result};
use crate::galerkin::{
    default_quad_order, sine_mode, CoefficientVector, GalerkinBasis, ProblemSpec,
};
use crate::mesh::ImpulseMesh;
use crate::quadrature::gauss_legendre_on;
use crate::spectral::dirichlet_eigenvalue;

pub const ODE_POINTS_PER_SUBINTERVAL: usize = 2048;
pub const WEAK_TEST_MODES: usize = 16;

const NODE_MATCH_TOL: f64 = 1e-12;
const STENCIL: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub ode_residual: f64,
    pub jump_residuals: Vec<f64>,
    pub boundary_residuals: [f64; 2],
    pub weak_residual: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.jump_residuals
            .iter()
            .chain(&self.boundary_residuals)
            .fold(self.ode_residual.max(self.weak_residual), |m, &r| m.max(r))
    }

    /// Every residual at most `tau`; NaN never passes.
    pub fn passes(&self, tau: f64) -> bool {
        let all = [self.ode_residual, self.weak_residual]
            .into_iter()
            .chain(self.boundary_residuals)
            .chain(self.jump_residuals.iter().copied());
        all.into_iter().all(|r| r <= tau)
    }
}

/// A solution given by point values; `xs` strictly increasing from 0 to 1
/// and containing every mesh node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSolution {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

impl SampledSolution {
    /// Splits into per-subinterval slices, each starting and ending at a node.
    fn split(&self, mesh: &ImpulseMesh) -> Result<Vec<(usize, usize)>> {
        let (xs, us) = (&self.xs, &self.us);
        if xs.len() != us.len() {
            return Err(Error::InvalidSamples(format!(
                "{} abscissae but {} values",
                xs.len(),
                us.len()
            )));
        }
        if let Some(i) = xs
            .iter()
            .zip(us)
            .position(|(x, u)| !x.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidSamples(format!(
                "non-finite entry in row {i}"
            )));
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSamples(format!(
                "x not strictly increasing at row {}",
                i + 1
            )));
        }
        let nodes = mesh.extended_nodes();
        let mut bounds = Vec::with_capacity(nodes.len());
        for &node in &nodes {
            let i = xs.partition_point(|&x| x < node - NODE_MATCH_TOL);
            if i == xs.len() || (xs[i] - node).abs() > NODE_MATCH_TOL {
                return Err(Error::InvalidSamples(format!(
                    "no sample at node x = {node}"
                )));
            }
            bounds.push(i);
        }
        let spans: Vec<(usize, usize)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
        if let Some(j) = spans.iter().position(|(s, e)| e - s + 1 < STENCIL) {
            return Err(Error::InvalidSamples(format!(
                "subinterval {j} has fewer than {STENCIL} samples"
            )));
        }
        Ok(spans)
    }
}

/// Per-subinterval sample abscissae with about `total` points overall,
/// allocated by length; every node appears exactly once.
pub fn solution_grid(mesh: &ImpulseMesh, total: usize) -> Vec<f64> {
    let lengths = mesh.lengths();
    let pieces = lengths.len();
    let gaps = total.saturating_sub(1).max(pieces * (STENCIL - 1));
    // largest-remainder allocation of the gaps
    let raw: Vec<f64> = lengths.iter().map(|l| l * gaps as f64).collect();
    let mut counts: Vec<usize> = raw
        .iter()
        .map(|r| (r.floor() as usize).max(STENCIL - 1))
        .collect();
    let mut order: Vec<usize> = (0..pieces).collect();
    order.sort_by(|&p, &q| (raw[q] - raw[q].floor()).total_cmp(&(raw[p] - raw[p].floor())));
    let mut k = 0;
    while counts.iter().sum::<usize>() < gaps {
        counts[order[k % pieces]] += 1;
        k += 1;
    }
    grid_from_counts(mesh, &counts).concat()
}

/// Uniform grid on each subinterval with `counts[j]` steps, excluding the left
/// node, ending exactly at the right node.
fn grid_from_counts(mesh: &ImpulseMesh, counts: &[usize]) -> Vec<Vec<f64>> {
    counts
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let (left, right) = mesh.subinterval(j);
            let mut pts: Vec<f64> = (0..n)
                .map(|i| {
                    if i + 1 == n {
                        right
                    } else {
                        left + (right - left) * (i + 1) as f64 / n as f64
                    }
                })
                .collect();
            if j == 0 {
                pts.insert(0, left);
            }
            pts
        })
        .collect()
}

fn uniform_grid(mesh: &ImpulseMesh, per_subinterval: usize) -> Vec<f64> {
    grid_from_counts(mesh, &vec![per_subinterval - 1; mesh.subinterval_count()]).concat()
}

/// Samples the solution with `u'(0) = s` on the grid `xs` (as from
/// [`solution_grid`]) by integrating through every grid point.
pub fn sample_shot(problem: &ProblemSpec, s: f64, xs: &[f64], tol: f64) -> Result<SampledSolution> {
    let mesh = problem.mesh();
    let mut stops = vec![Vec::new(); mesh.subinterval_count()];
    for &x in &xs[1..] {
        // right-closed subintervals: a node ends its own subinterval
        let j = mesh.points().partition_point(|&p| p < x);
        stops[j].push(x);
    }
    let t = shoot_through(problem, s, tol, &stops, false)?;
    let mut us = vec![0.0];
    for seg in &t.segments {
        us.extend_from_slice(&seg.us[1..]);
    }
    Ok(SampledSolution {
        xs: xs.to_vec(),
        us,
    })
}

fn fd_window(start: usize, end: usize, i: usize) -> usize {
    // first index of a STENCIL-point window around i inside [start, end]
    i.saturating_sub(STENCIL / 2)
        .clamp(start, end + 1 - STENCIL)
}

fn ode_residual(problem: &ProblemSpec, s: &SampledSolution, spans: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0_f64;
    for (j, &(start, end)) in spans.iter().enumerate() {
        for i in start + 2..end - 1 {
            let w = i - 2;
            let d2 = fd::derivative(s.xs[i], &s.xs[w..w + STENCIL], &s.us[w..w + STENCIL], 2);
            let r = (-d2 - problem.f(j, s.us[i])).abs();
            worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
        }
    }
    worst
}

fn sampled_slopes(s: &SampledSolution, spans: &[(usize, usize)], node: usize) -> (f64, f64) {
    let (_, le) = spans[node];
    let (rs, _) = spans[node + 1];
    let l = le + 1 - STENCIL;
    let before = fd::derivative(s.xs[le], &s.xs[l..=le], &s.us[l..=le], 1);
    let r = rs + STENCIL;
    let after = fd::derivative(s.xs[rs], &s.xs[rs..r], &s.us[rs..r], 1);
    (before, after)
}

/// Value of the local quartic interpolant through the samples near `x`.
fn interpolate(s: &SampledSolution, start: usize, end: usize, x: f64) -> f64 {
    let i = s.xs[start..=end].partition_point(|&p| p < x) + start;
    let w = fd_window(start, end, i);
    fd::derivative(x, &s.xs[w..w + STENCIL], &s.us[w..w + STENCIL], 0)
}

/// Largest weak-form defect against the normalized test functions of the
/// `WEAK_TEST_MODES` basis: sine modes on each subinterval and the representers.
fn weak_residual<U>(problem: &ProblemSpec, node_values: &[f64], eval: U) -> f64
where
    U: Fn(usize, f64) -> f64,
{
    let mesh = problem.mesh();
    let m = mesh.node_count();
    let q = default_quad_order(WEAK_TEST_MODES);
    let gram = mesh.gram();
    let mut m_integrals = vec![0.0; m];
    let mut worst = 0.0_f64;
    for j in 0..=m {
        let (left, right) = mesh.subinterval(j);
        let len = right - left;
        let (ul, ur) = (
            if j == 0 { 0.0 } else { node_values[j - 1] },
            if j == m { 0.0 } else { node_values[j] },
        );
        let (xs, ws) = gauss_legendre_on(q, left, right);
        let us: Vec<f64> = xs.iter().map(|&x| eval(j, x)).collect();
        let fs: Vec<f64> = us.iter().map(|&u| problem.f(j, u)).collect();
        for k in 1..=WEAK_TEST_MODES {
            let lam = dirichlet_eigenvalue(len, k);
            let mut d = 0.0;
            for i in 0..q {
                let v = us[i] - (ul + (ur - ul) * (xs[i] - left) / len);
                d += ws[i] * (lam * v - fs[i]) * sine_mode(left, len, k, xs[i]);
            }
            worst = if d.is_nan() {
                f64::NAN
            } else {
                worst.max(d.abs())
            };
        }
        for (l, acc) in m_integrals.iter_mut().enumerate() {
            let xl = mesh.points()[l];
            *acc += (0..q)
                .map(|i| ws[i] * fs[i] * crate::mesh::tent(xl, xs[i]))
                .sum::<f64>();
        }
    }
    for l in 0..m {
        let impulses: f64 = (0..m)
            .map(|i| problem.impulse(i, node_values[i]) * gram[(l, i)])
            .sum();
        let d = (node_values[l] - m_integrals[l] - impulses) / gram[(l, l)].sqrt();
        worst = if d.is_nan() {
            f64::NAN
        } else {
            worst.max(d.abs())
        };
    }
    worst
}

/// Residuals of point samples; derivatives by 5-point finite differences.
pub fn verify_samples(problem: &ProblemSpec, samples: &SampledSolution) -> Result<ResidualReport> {
    let spans = samples.split(problem.mesh())?;
    let m = problem.mesh().node_count();
    let node_values: Vec<f64> = (0..m).map(|l| samples.us[spans[l].1]).collect();
    let jump_residuals = (0..m)
        .map(|l| {
            let (before, after) = sampled_slopes(samples, &spans, l);
            (after - before + problem.impulse(l, node_values[l])).abs()
        })
        .collect();
    let weak = weak_residual(problem, &node_values, |j, x| {
        let (s, e) = spans[j];
        interpolate(samples, s, e, x)
    });
    Ok(ResidualReport {
        ode_residual: ode_residual(problem, samples, &spans),
        jump_residuals,
        boundary_residuals: [samples.us[0].abs(), samples.us[samples.us.len() - 1].abs()],
        weak_residual: weak,
    })
}

/// Residuals of a shooting trajectory: re-integrated on a uniform grid of
/// `ODE_POINTS_PER_SUBINTERVAL` points per subinterval, jumps from the record.
pub fn verify_trajectory(problem: &ProblemSpec, trajectory: &Trajectory) -> Result<ResidualReport> {
    let grid = uniform_grid(problem.mesh(), ODE_POINTS_PER_SUBINTERVAL);
    let samples = sample_shot(
        problem,
        trajectory.initial_slope,
        &grid,
        DEFAULT_INTEGRATOR_TOL,
    )?;
    let mut report = verify_samples(problem, &samples)?;
    report.jump_residuals = trajectory
        .jumps
        .iter()
        .enumerate()
        .map(|(l, j)| (j.slope_after - j.slope_before + problem.impulse(l, j.u)).abs())
        .collect();
    report.boundary_residuals[1] = trajectory.terminal_value().abs();
    Ok(report)
}

/// Residuals of a Galerkin expansion; one-sided slopes at nodes are exact.
pub fn verify_expansion(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    coeffs: &CoefficientVector,
) -> Result<ResidualReport> {
    if basis.mesh() != problem.mesh() {
        return Err(Error::MeshMismatch);
    }
    basis.check(coeffs)?;
    let mesh = problem.mesh();
    let grid = uniform_grid(mesh, ODE_POINTS_PER_SUBINTERVAL);
    let us = grid
        .iter()
        .map(|&x| basis.eval_u(coeffs, x))
        .collect::<Result<Vec<_>>>()?;
    let samples = SampledSolution { xs: grid, us };
    let spans = samples.split(mesh)?;
    let node_values = basis.node_values(coeffs)?;
    let mut jump_residuals = Vec::with_capacity(node_values.len());
    for (l, &x) in mesh.points().iter().enumerate() {
        let before = basis.eval_du_on(coeffs, l, x)?;
        let after = basis.eval_du_on(coeffs, l + 1, x)?;
        jump_residuals.push((after - before + problem.impulse(l, node_values[l])).abs());
    }
    let weak = weak_residual(problem, &node_values, |_, x| {
        basis.eval_u(coeffs, x).unwrap_or(f64::NAN)
    });
    Ok(ResidualReport {
        ode_residual: ode_residual(problem, &samples, &spans),
        jump_residuals,
        boundary_residuals: [
            basis.eval_u(coeffs, 0.0)?.abs(),
            basis.eval_u(coeffs, 1.0)?.abs(),
        ],
        weak_residual: weak,
    })
}

/// Residuals of a function sampled on the uniform verification grid.
pub fn verify_function<U: Fn(f64) -> f64>(problem: &ProblemSpec, u: U) -> Result<ResidualReport> {
    let xs = uniform_grid(problem.mesh(), ODE_POINTS_PER_SUBINTERVAL);
    let us = xs.iter().map(|&x| u(x)).collect();
    verify_samples(problem, &SampledSolution { xs, us })
}
