//! Critical points of the discretized functional: safeguarded Newton iteration
//! and a multistart seeded along the saddle splitting.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{
    default_quad_order, energy, gradient, hessian, CoefficientVector, GalerkinBasis, ProblemSpec,
};
use crate::shooting::{
    refine_slope, shoot, verify_expansion, verify_trajectory, ResidualReport,
    DEFAULT_INTEGRATOR_TOL,
};
use crate::spectral::{spectral_report, SubintervalClass, DEFAULT_REL_TOL};

const SINGULAR_REL: f64 = 1e-10;
const SINGULAR_SHIFT: f64 = 1e-8;
const INERTIA_REL: f64 = 1e-9;
const BACKTRACKS: usize = 12;
const LM_TRIES: usize = 10;
const MAX_RADIUS: f64 = 1e3;
const SHOOTING_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Sine modes per subinterval for the search.
    pub modes: usize,
    /// Gauss points per subinterval; `None` picks a safe default.
    pub quad_order: Option<usize>,
    /// Modes used to refine converged points; 0 disables refinement.
    pub refine_modes: usize,
    pub max_iters: usize,
    pub gradient_tol: f64,
    pub trust_radius_init: f64,
    pub radii: Vec<f64>,
    /// Seeds per radius; `None` means `2·dim + 2`.
    pub directions_per_radius: Option<usize>,
    pub dedup_distance: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            modes: 8,
            quad_order: None,
            refine_modes: 32,
            max_iters: 100,
            gradient_tol: 1e-10,
            trust_radius_init: 1.0,
            radii: vec![0.5, 2.0, 8.0],
            directions_per_radius: None,
            dedup_distance: 1e-5,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tol", self.gradient_tol),
            ("trust_radius_init", self.trust_radius_init),
            ("dedup_distance", self.dedup_distance),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if let Some(&r) = self.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Domain {
                name: "radii",
                value: r,
                reason: "must be positive and finite",
            });
        }
        for (name, v) in [("modes", self.modes), ("max_iters", self.max_iters)] {
            if v == 0 {
                return Err(Error::Domain {
                    name,
                    value: 0.0,
                    reason: "must be at least 1",
                });
            }
        }
        Ok(())
    }

    fn basis(&self, problem: &ProblemSpec, modes: usize) -> Result<GalerkinBasis> {
        let q = match self.quad_order {
            Some(q) if modes == self.modes => q,
            _ => default_quad_order(modes),
        };
        GalerkinBasis::new(problem.mesh(), modes, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub negatives: usize,
    pub zeros: usize,
    pub positives: usize,
}

impl Inertia {
    pub fn of(eigenvalues: &[f64]) -> Self {
        let scale = eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
        let tol = INERTIA_REL * scale;
        let negatives = eigenvalues.iter().filter(|&&l| l < -tol).count();
        let positives = eigenvalues.iter().filter(|&&l| l > tol).count();
        Self {
            negatives,
            zeros: eigenvalues.len() - negatives - positives,
            positives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub coeffs: CoefficientVector,
    /// `u(x_j)` of the Galerkin point.
    pub galerkin_node_values: Vec<f64>,
    /// `u(x_j)` after shooting refinement, or the Galerkin values without it.
    pub node_values: Vec<f64>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub hessian_inertia: Inertia,
    pub converged: bool,
    pub iterations: usize,
    pub trivial: bool,
    /// `u'(0)` of the shooting solution matching this point, when found.
    pub initial_slope: Option<f64>,
    pub verification: ResidualReport,
}

#[derive(Debug, Clone)]
struct NewtonRun {
    coeffs: CoefficientVector,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

fn grad_vec(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    c: &DVector<f64>,
) -> Result<DVector<f64>> {
    let cv = CoefficientVector::from_values(
        basis.modes(),
        basis.mesh().node_count(),
        c.as_slice().to_vec(),
    )?;
    Ok(gradient(problem, basis, &cv)?.to_dvector())
}

fn finite_norm(v: &DVector<f64>) -> f64 {
    let n = v.norm();
    if n.is_finite() {
        n
    } else {
        f64::INFINITY
    }
}

/// Newton step with near-zero eigenvalues shifted away from zero.
fn newton_step(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let eig = h.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let gt = eig.eigenvectors.tr_mul(g);
    let coords = DVector::from_iterator(
        gt.len(),
        gt.iter().zip(eig.eigenvalues.iter()).map(|(gi, &l)| {
            let mut l = l;
            if l.abs() < SINGULAR_REL * scale {
                l += SINGULAR_SHIFT;
                if l.abs() < SINGULAR_SHIFT * 1e-3 {
                    l = SINGULAR_SHIFT;
                }
            }
            -gi / l
        }),
    );
    &eig.eigenvectors * coords
}

fn newton_core(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    init: &CoefficientVector,
    opts: &SolverOptions,
) -> Result<NewtonRun> {
    basis.check(init)?;
    let modes = basis.modes();
    let nodes = basis.mesh().node_count();
    let to_cv =
        |v: &DVector<f64>| CoefficientVector::from_values(modes, nodes, v.as_slice().to_vec());

    let mut c = init.to_dvector();
    let mut g = grad_vec(problem, basis, &c)?;
    let mut gn = finite_norm(&g);
    let mut radius = opts.trust_radius_init;
    let mut iterations = 0;
    while gn > opts.gradient_tol && gn.is_finite() && iterations < opts.max_iters {
        iterations += 1;
        let h = hessian(problem, basis, &to_cv(&c)?)?;
        if h.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut step = newton_step(&h, &g);
        let len = step.norm();
        if len > radius {
            step *= radius / len;
        }

        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..BACKTRACKS {
            let trial = &c + t * &step;
            let gt = grad_vec(problem, basis, &trial)?;
            let n = finite_norm(&gt);
            if n < gn {
                accepted = Some((trial, gt, n));
                break;
            }
            t *= 0.5;
        }
        if accepted.is_none() {
            // Levenberg–Marquardt on ½‖∇Φ‖²
            let hg = &h * &g;
            let hh = &h * &h;
            let mut mu = 1e-6 * hh.diagonal().amax().max(1e-12);
            for _ in 0..LM_TRIES {
                let mut sys = hh.clone();
                for i in 0..sys.nrows() {
                    sys[(i, i)] += mu;
                }
                if let Some(s) = sys.cholesky().map(|ch| -ch.solve(&hg)) {
                    let mut s = s;
                    let sl = s.norm();
                    if sl > radius {
                        s *= radius / sl;
                    }
                    let trial = &c + &s;
                    let gt = grad_vec(problem, basis, &trial)?;
                    let n = finite_norm(&gt);
                    if n < gn {
                        accepted = Some((trial, gt, n));
                        t = 0.0;
                        break;
                    }
                }
                mu *= 10.0;
            }
        }
        match accepted {
            Some((trial, gt, n)) => {
                let moved = (&trial - &c).norm();
                c = trial;
                g = gt;
                gn = n;
                radius = if t == 1.0 {
                    (2.0 * radius).min(MAX_RADIUS)
                } else {
                    moved.max(1e-8)
                };
            }
            None => break,
        }
    }
    Ok(NewtonRun {
        coeffs: to_cv(&c)?,
        gradient_norm: gn,
        iterations,
        converged: gn <= opts.gradient_tol,
    })
}

fn finish(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    run: NewtonRun,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let h = hessian(problem, basis, &run.coeffs)?;
    let eig = h.symmetric_eigen();
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let node_values = basis.node_values(&run.coeffs)?;
    let norm = basis.norm_squared(&run.coeffs)?.sqrt();
    Ok(CriticalPoint {
        energy: energy(problem, basis, &run.coeffs)?,
        hessian_inertia: Inertia::of(&eigenvalues),
        verification: verify_expansion(problem, basis, &run.coeffs)?,
        galerkin_node_values: node_values.clone(),
        node_values,
        coeffs: run.coeffs,
        gradient_norm: run.gradient_norm,
        converged: run.converged,
        iterations: run.iterations,
        trivial: norm <= opts.dedup_distance,
        initial_slope: None,
    })
}

/// Damped Newton iteration on `∇Φ = 0` from `init`.
///
/// Steps are limited by a trust radius and backtracked on `‖∇Φ‖`; when no
/// backtracked step reduces it a Levenberg–Marquardt step on `½‖∇Φ‖²` is tried.
/// Non-convergence is reported through `converged`, with the best iterate.
pub fn newton_critical_point(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    init: &CoefficientVector,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    opts.validate()?;
    if basis.mesh() != problem.mesh() {
        return Err(Error::MeshMismatch);
    }
    let run = newton_core(problem, basis, init, opts)?;
    finish(problem, basis, run, opts)
}

/// For every basis coordinate, whether it lies in the negative block `H₁`
/// (low sine modes on subintervals above their ground state, and all of `M`).
pub fn saddle_splitting(problem: &ProblemSpec, basis: &GalerkinBasis) -> Result<Vec<bool>> {
    let report = spectral_report(problem.mesh(), problem.a(), DEFAULT_REL_TOL)?;
    let n = basis.modes();
    let mut out = vec![false; basis.dim()];
    for (j, s) in report.subintervals.iter().enumerate() {
        if s.class == SubintervalClass::J1 {
            for k in 1..=s.d.min(n) {
                out[basis.sine_index(j, k)] = true;
            }
        }
    }
    for l in 0..problem.mesh().node_count() {
        out[basis.m_index(l)] = true;
    }
    Ok(out)
}

fn seeds(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    opts: &SolverOptions,
) -> Result<Vec<CoefficientVector>> {
    let dim = basis.dim();
    let nodes = problem.mesh().node_count();
    let split = saddle_splitting(problem, basis)?;
    let (h1, h2): (Vec<usize>, Vec<usize>) = (0..dim).partition(|&i| split[i]);
    let per_radius = opts.directions_per_radius.unwrap_or(2 * dim + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let unit = |v: Vec<f64>| -> Result<CoefficientVector> {
        let c = CoefficientVector::from_values(basis.modes(), nodes, v)?;
        let norm = basis.norm_squared(&c)?.sqrt();
        let scaled = c.as_slice().iter().map(|x| x / norm).collect();
        CoefficientVector::from_values(basis.modes(), nodes, scaled)
    };

    let mut out = vec![basis.zeros()];
    for &radius in &opts.radii {
        let mut dirs = Vec::with_capacity(per_radius);
        for &i in h1.iter().chain(&h2) {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[i] = sign;
                dirs.push(v);
            }
        }
        dirs.truncate(per_radius);
        while dirs.len() < per_radius {
            // mixed: random parts in both blocks
            let v: Vec<f64> = (0..dim)
                .map(|i| {
                    let block = if split[i] { h1.len() } else { h2.len() };
                    rng.random_range(-1.0..1.0) / (block as f64).sqrt()
                })
                .collect();
            dirs.push(v);
        }
        for v in dirs {
            let u = unit(v)?;
            let scaled = u.as_slice().iter().map(|x| x * radius).collect();
            out.push(CoefficientVector::from_values(
                basis.modes(),
                nodes,
                scaled,
            )?);
        }
    }
    Ok(out)
}

/// Re-solves at `opts.refine_modes` and polishes with the shooting oracle.
///
/// The returned point carries the shooting verification when the shooting
/// Newton iteration converges near the Galerkin point, and the verification of
/// the refined expansion otherwise.
pub fn refine_point(
    problem: &ProblemSpec,
    point: &CriticalPoint,
    opts: &SolverOptions,
) -> Result<CriticalPoint> {
    let basis = opts.basis(problem, opts.refine_modes.max(point.coeffs.modes()))?;
    let init = point.coeffs.prolong(basis.modes());
    let run = newton_core(problem, &basis, &init, opts)?;
    let mut refined = finish(problem, &basis, run, opts)?;
    refined.iterations += point.iterations;

    let s0 = basis.eval_du_on(&refined.coeffs, 0, 0.0)?;
    if let Some(s) = refine_slope(problem, s0, DEFAULT_INTEGRATOR_TOL, SHOOTING_ITERS)? {
        let trajectory = shoot(problem, s, DEFAULT_INTEGRATOR_TOL)?;
        let shot = trajectory.node_values();
        let close = shot
            .iter()
            .zip(&refined.galerkin_node_values)
            .all(|(a, b)| (a - b).abs() <= 1e-3 * (1.0 + b.abs()));
        if close {
            refined.verification = verify_trajectory(problem, &trajectory)?;
            refined.node_values = shot;
            refined.initial_slope = Some(s);
        }
    }
    Ok(refined)
}

fn dedup(points: Vec<CriticalPoint>, distance: f64) -> Vec<CriticalPoint> {
    let mut kept: Vec<CriticalPoint> = Vec::new();
    for p in points {
        if kept.iter().all(|k| k.coeffs.distance(&p.coeffs) > distance) {
            kept.push(p);
        }
    }
    kept
}

/// Multistart Newton from `u₀ = ρ e` for every radius `ρ` and seed direction
/// `e` (unit coordinate directions of both blocks of the saddle splitting and
/// random mixed ones), plus `u₀ = 0`.
///
/// Converged points are deduplicated, refined (see [`refine_point`]) and
/// returned trivial point first, then by energy.
pub fn saddle_search(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    opts: &SolverOptions,
) -> Result<Vec<CriticalPoint>> {
    opts.validate()?;
    if basis.mesh() != problem.mesh() {
        return Err(Error::MeshMismatch);
    }
    let starts = seeds(problem, basis, opts)?;
    let runs: Vec<NewtonRun> = starts
        .par_iter()
        .map(|s| newton_core(problem, basis, s, opts))
        .collect::<Result<_>>()?;

    let mut unique: Vec<NewtonRun> = Vec::new();
    for run in runs.into_iter().filter(|r| r.converged) {
        if unique
            .iter()
            .all(|u| u.coeffs.distance(&run.coeffs) > opts.dedup_distance)
        {
            unique.push(run);
        }
    }
    if unique.is_empty() {
        return Err(Error::NoCriticalPoints {
            starts: starts.len(),
        });
    }
    let found: Vec<CriticalPoint> = unique
        .into_par_iter()
        .map(|run| {
            let point = finish(problem, basis, run, opts)?;
            if opts.refine_modes > 0 {
                refine_point(problem, &point, opts)
            } else {
                Ok(point)
            }
        })
        .collect::<Result<_>>()?;
    let mut found = dedup(
        found.into_iter().filter(|p| p.converged).collect(),
        opts.dedup_distance,
    );
    found.sort_by(|a, b| {
        b.trivial
            .cmp(&a.trivial)
            .then(a.energy.total_cmp(&b.energy))
            .then_with(|| {
                a.node_values
                    .iter()
                    .zip(&b.node_values)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    if found.is_empty() {
        return Err(Error::NoCriticalPoints {
            starts: starts.len(),
        });
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::Nonlinearity;
    use crate::mesh::ImpulseMesh;

    fn half() -> ImpulseMesh {
        ImpulseMesh::new(&[0.5]).unwrap()
    }

    fn cubic_benchmark() -> ProblemSpec {
        ProblemSpec::linear(half(), vec![0.0, 0.0], vec![0.0])
            .unwrap()
            .with_uniform_impulse(Nonlinearity::from_catalog("cubic").unwrap().unwrap())
    }

    #[test]
    fn linear_problem_converges_to_zero() {
        let p = ProblemSpec::linear(half(), vec![0.0; 2], vec![2.0]).unwrap();
        let basis = GalerkinBasis::with_modes(&half(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let init = CoefficientVector::from_values(
            6,
            1,
            (0..basis.dim())
                .map(|_| rng.random_range(-3.0..3.0))
                .collect(),
        )
        .unwrap();
        let cp = newton_critical_point(&p, &basis, &init, &SolverOptions::default()).unwrap();
        assert!(cp.converged);
        assert!(cp.coeffs.euclidean_norm() < 1e-10);
        assert!(cp.trivial);
    }

    #[test]
    fn zero_start_returns_immediately() {
        let basis = GalerkinBasis::with_modes(&half(), 4).unwrap();
        let cp = newton_critical_point(
            &cubic_benchmark(),
            &basis,
            &basis.zeros(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(cp.iterations, 0);
        assert!(cp.trivial && cp.converged);
        assert_eq!(cp.energy, 0.0);
    }

    #[test]
    fn benchmark_from_nearby_start() {
        let basis = GalerkinBasis::with_modes(&half(), 8).unwrap();
        let mut init = CoefficientVector::from_m_part(8, &[7.0]);
        init.as_mut_slice()[0] = 0.05;
        let cp =
            newton_critical_point(&cubic_benchmark(), &basis, &init, &SolverOptions::default())
                .unwrap();
        assert!(cp.converged);
        assert!((cp.node_values[0] - 2.0).abs() < 1e-8);
        assert!((cp.energy - 4.0).abs() < 1e-8);
        // impulse Hessian 1/4 - 3·4·(1/16) < 0 on M, identity on N
        assert_eq!(cp.hessian_inertia.negatives, 1);
    }

    #[test]
    fn linear_inertia_at_zero_matches_morse_index() {
        let mesh = ImpulseMesh::new(&[0.3, 0.6]).unwrap();
        for b in [[0.0, 0.0], [10.0, 1.0], [20.0, 30.0]] {
            let p = ProblemSpec::linear(mesh.clone(), vec![0.0; 3], b.to_vec()).unwrap();
            let basis = GalerkinBasis::with_modes(&mesh, 4).unwrap();
            let cp = newton_critical_point(&p, &basis, &basis.zeros(), &SolverOptions::default())
                .unwrap();
            let m0 = crate::resonance::morse_report(&mesh, &b).unwrap().m0;
            assert_eq!(cp.hessian_inertia.negatives, m0);
        }
    }

    #[test]
    fn search_finds_benchmark_triple() {
        let basis = GalerkinBasis::with_modes(&half(), 8).unwrap();
        let pts = saddle_search(&cubic_benchmark(), &basis, &SolverOptions::default()).unwrap();
        assert_eq!(
            pts.len(),
            3,
            "{:?}",
            pts.iter().map(|p| &p.node_values).collect::<Vec<_>>()
        );
        assert!(pts[0].trivial);
        for p in &pts[1..] {
            assert!((p.node_values[0].abs() - 2.0).abs() < 1e-8);
            assert!((p.energy - 4.0).abs() < 1e-8);
            assert!(p.initial_slope.is_some());
            assert!(p.verification.jump_residuals[0] < 1e-8);
        }
    }

    #[test]
    fn search_is_deterministic() {
        let basis = GalerkinBasis::with_modes(&half(), 4).unwrap();
        let opts = SolverOptions {
            modes: 4,
            refine_modes: 0,
            seed: 3,
            ..SolverOptions::default()
        };
        let a = saddle_search(&cubic_benchmark(), &basis, &opts).unwrap();
        let b = saddle_search(&cubic_benchmark(), &basis, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn options_validated() {
        let bad = SolverOptions {
            gradient_tol: 0.0,
            ..SolverOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            radii: vec![1.0, -2.0],
            ..SolverOptions::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn splitting_counts_saddle_dimension() {
        let a = 50.0 * std::f64::consts::PI.powi(2);
        let p = ProblemSpec::linear(half(), vec![a, a], vec![3.0]).unwrap();
        let basis = GalerkinBasis::with_modes(&half(), 8).unwrap();
        let split = saddle_splitting(&p, &basis).unwrap();
        assert_eq!(split.iter().filter(|&&s| s).count(), 7);
    }
}
