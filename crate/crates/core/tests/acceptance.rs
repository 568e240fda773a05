//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use impulse_morse::app::parse_problem_file;
use impulse_morse::galerkin::{energy, gradient, hessian};
use impulse_morse::resonance::{
    hessian_on_m, morse_report, nontriviality_certificate, resonance_det, resonance_path_scan,
};
use impulse_morse::shooting::{bisect_solutions, linear_transfer, verify_trajectory};
use impulse_morse::solver::{newton_critical_point, saddle_search, SolverOptions};
use impulse_morse::spectral::subinterval_eigenvalue;
use impulse_morse::{CoefficientVector, GalerkinBasis, ImpulseMesh, Nonlinearity, ProblemSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_mesh(rng: &mut ChaCha8Rng, max_m: usize) -> ImpulseMesh {
    loop {
        let m = rng.random_range(1..=max_m);
        let mut pts: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
        pts.sort_by(f64::total_cmp);
        let spaced = pts.windows(2).all(|w| w[1] - w[0] > 0.05);
        if spaced {
            return ImpulseMesh::new(&pts).unwrap();
        }
    }
}

/// `G_jk = min(x_j, x_k) (1 - max(x_j, x_k))`, built from the node list alone.
fn green_gram(points: &[f64]) -> DMatrix<f64> {
    let m = points.len();
    DMatrix::from_fn(m, m, |j, k| {
        let (lo, hi) = if points[j] < points[k] {
            (points[j], points[k])
        } else {
            (points[k], points[j])
        };
        lo * (1.0 - hi)
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `f` on `[0, 1]` from sign changes on a uniform grid.
fn roots(f: &impl Fn(f64) -> f64, grid: usize, width: f64) -> Vec<f64> {
    let ts: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for i in 0..grid {
        if vs[i] == 0.0 {
            out.push(ts[i]);
        } else if vs[i + 1] != 0.0 && vs[i].signum() != vs[i + 1].signum() {
            out.push(bisect(f, ts[i], ts[i + 1], width));
        }
    }
    out
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut total, mut worst) = (0usize, 0.0_f64);
    for _ in 0..50 {
        let mesh = random_mesh(&mut rng, 4);
        let m = mesh.node_count();
        let b0: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..60.0)).collect();
        let b1: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..60.0)).collect();
        let span = b0
            .iter()
            .zip(&b1)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        let width = 1e-12 / span;
        let det = |t: f64| resonance_det(&mesh, &lerp(&b0, &b1, t)).unwrap().det;
        let transfer = |t: f64| linear_transfer(&mesh, &lerp(&b0, &b1, t)).unwrap();
        let rd = roots(&det, 400, width);
        let rt = roots(&transfer, 400, width);
        if rd.len() != rt.len() {
            return Err(format!("root counts differ: det {rd:?}, transfer {rt:?}"));
        }
        for (a, b) in rd.iter().zip(&rt) {
            worst = worst.max((a - b).abs() * span);
        }
        total += rd.len();
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && secs < 10.0,
        format!("{total} roots on 50 paths, max |Δb| = {worst:.2e}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let mesh = random_mesh(&mut rng, 6);
        let m = mesh.node_count();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-20.0..40.0)).collect();
        let g = green_gram(mesh.points());
        if (&g - mesh.gram()).amax() > 1e-15 {
            return Err("Gram matrix differs from the Green's function".into());
        }
        let det_a = hessian_on_m(&mesh, &b).unwrap().determinant();
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let rhs = g.determinant() * sign * resonance_det(&mesh, &b).unwrap().det;
        let rel = (det_a - rhs).abs() / det_a.abs().max(rhs.abs());
        worst = worst.max(rel);
    }
    check(
        worst <= 1e-9,
        format!("500 cases, max relative error {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let half = ImpulseMesh::new(&[0.5]).unwrap();
    let r = bisect(|b| resonance_det(&half, &[b]).unwrap().det, 0.0, 8.0, 1e-13);
    ok &= (r - 4.0).abs() <= 1e-10 && resonance_det(&half, &[4.0]).unwrap().in_b;
    notes.push(format!("B[0.5] = {{{r:.12}}}"));

    let thirds = ImpulseMesh::new(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
    let f = |t: f64| resonance_det(&thirds, &[t, t]).unwrap().det / 12.0;
    let rs = roots(&|s: f64| f(12.0 * s), 120, 1e-15);
    let rs: Vec<f64> = rs.iter().map(|s| 12.0 * s).collect();
    ok &= rs.len() == 2 && (rs[0] - 3.0).abs() <= 1e-10 && (rs[1] - 9.0).abs() <= 1e-10;
    notes.push(format!("t = {rs:.12?}"));

    let cert = nontriviality_certificate(
        &ProblemSpec::linear(half.clone(), vec![0.0; 2], vec![0.0]).unwrap(),
    )
    .unwrap();
    let thr = cert.impulse_thresholds[0];
    ok &= (thr - 4.0).abs() <= 1e-10;
    notes.push(format!("impulse threshold {thr}"));

    for m in 1..=6 {
        let mesh = ImpulseMesh::equally_spaced(m).unwrap();
        let p = ProblemSpec::linear(mesh, vec![0.0; m + 1], vec![0.0; m]).unwrap();
        let eq = nontriviality_certificate(&p)
            .unwrap()
            .equally_spaced
            .unwrap();
        let k = (m + 1) as f64;
        ok &= (eq.a_threshold - k * k * PI * PI).abs() <= 1e-10 * k * k * PI * PI;
        ok &= (eq.b_threshold - 2.0 * k).abs() <= 1e-10;
    }
    notes.push("equally spaced thresholds for m = 1..6".into());
    check(ok, notes.join(", "))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut crossing_count, mut quiet_paths) = (0usize, 0usize);
    for path in 0..20 {
        let mesh = random_mesh(&mut rng, 4);
        let m = mesh.node_count();
        let (b0, b1) = loop {
            let b0: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..50.0)).collect();
            let b1: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..50.0)).collect();
            if !resonance_det(&mesh, &b0).unwrap().in_b && !resonance_det(&mesh, &b1).unwrap().in_b
            {
                break (b0, b1);
            }
        };
        let scan = resonance_path_scan(&mesh, &b0, &b1, 200).unwrap();
        if !scan.m0_constant_between_crossings {
            return Err(format!(
                "path {path}: m0 changed away from a crossing at {:?}",
                scan.violations
            ));
        }
        // independent monitor: m0 is constant wherever det keeps its sign
        let mut prev: Option<(f64, usize)> = None;
        for i in 0..=400 {
            let b = lerp(&b0, &b1, i as f64 / 400.0);
            let d = resonance_det(&mesh, &b).unwrap().det;
            let m0 = morse_report(&mesh, &b).unwrap().m0;
            if let Some((pd, pm)) = prev {
                if pd.signum() == d.signum() && pm != m0 {
                    let t = i as f64 / 400.0;
                    let near = scan
                        .crossings
                        .iter()
                        .any(|c| (c.t - t).abs() <= 1.0 / 400.0);
                    if !near {
                        return Err(format!(
                            "path {path}: m0 {pm} -> {m0} without a sign change"
                        ));
                    }
                }
            }
            prev = Some((d, m0));
        }
        if scan.crossings.is_empty() {
            quiet_paths += 1;
        }
        for c in &scan.crossings {
            let g = green_gram(mesh.points());
            let a =
                &g - &g * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&c.b)) * &g;
            let eig = SymmetricEigen::new(a.clone()).eigenvalues;
            let scale = a.amax().max(1.0);
            let nullity = eig.iter().filter(|l| l.abs() <= 1e-8 * scale).count();
            let jump = c.m0_after.abs_diff(c.m0_before);
            if nullity == 0 || jump != nullity {
                return Err(format!(
                    "path {path}: m0 {} -> {} across a crossing of multiplicity {nullity}",
                    c.m0_before, c.m0_after
                ));
            }
            crossing_count += 1;
        }
    }
    check(
        true,
        format!("20 paths ({quiet_paths} avoid B), {crossing_count} crossings each changing m0 by its multiplicity"),
    )
}

fn example_problem() -> ProblemSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems/example.toml");
    parse_problem_file(&path).unwrap().problem
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let problem = example_problem();
    let basis = GalerkinBasis::with_modes(problem.mesh(), 8).unwrap();
    let dim = basis.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_g, mut worst_h) = (0.0_f64, 0.0_f64);
    let at = |v: &[f64]| CoefficientVector::from_values(8, 1, v.to_vec()).unwrap();
    for _ in 0..20 {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let g = gradient(&problem, &basis, &at(&c)).unwrap();
        let h = hessian(&problem, &basis, &at(&c)).unwrap();
        let step = 1e-5;
        let mut fd_g = vec![0.0; dim];
        let mut fd_h = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut plus = c.clone();
            let mut minus = c.clone();
            plus[i] += step;
            minus[i] -= step;
            let (p, mi) = (at(&plus), at(&minus));
            fd_g[i] = (energy(&problem, &basis, &p).unwrap()
                - energy(&problem, &basis, &mi).unwrap())
                / (2.0 * step);
            let gp = gradient(&problem, &basis, &p).unwrap();
            let gm = gradient(&problem, &basis, &mi).unwrap();
            for k in 0..dim {
                fd_h[(i, k)] = (gp.as_slice()[k] - gm.as_slice()[k]) / (2.0 * step);
            }
        }
        let gn = g.as_slice().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let ge = g
            .as_slice()
            .iter()
            .zip(&fd_g)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        worst_g = worst_g.max(ge / gn);
        for i in 0..dim {
            let row = h.row(i);
            let rn = row.amax();
            let re = (row - fd_h.row(i)).amax();
            worst_h = worst_h.max(re / rn);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_g <= 1e-6 && worst_h <= 1e-5 && secs < 5.0,
        format!("dim {dim}, gradient rel err {worst_g:.2e}, Hessian row rel err {worst_h:.2e}, {secs:.2} s"),
    )
}

fn cubic_benchmark() -> ProblemSpec {
    let mesh = ImpulseMesh::new(&[0.5]).unwrap();
    ProblemSpec::linear(mesh, vec![0.0, 0.0], vec![0.0])
        .unwrap()
        .with_uniform_impulse(Nonlinearity::from_catalog("cubic").unwrap().unwrap())
}

fn criterion_6() -> Outcome {
    let problem = cubic_benchmark();
    let sols = bisect_solutions(&problem, (-10.0, 10.0), 200, 1e-13).unwrap();
    let slopes: Vec<f64> = sols.iter().map(|t| t.initial_slope).collect();
    let slopes_ok = slopes.len() == 3
        && slopes
            .iter()
            .zip([-4.0, 0.0, 4.0])
            .all(|(s, e)| (s - e).abs() <= 1e-10);

    let basis = GalerkinBasis::with_modes(problem.mesh(), 8).unwrap();
    let points = saddle_search(&problem, &basis, &SolverOptions::default()).unwrap();
    let nontrivial: Vec<_> = points.iter().filter(|p| !p.trivial).collect();
    let w1_half = 0.25;
    let mut ok = slopes_ok && nontrivial.len() == 2;
    let (mut ode, mut rest) = (0.0_f64, 0.0_f64);
    for p in &nontrivial {
        let u = p.node_values[0];
        let c = p.coeffs.m_part()[0];
        ok &= (u.abs() - 2.0).abs() <= 1e-8;
        ok &= (c.abs() - 2.0 / w1_half).abs() <= 1e-8;
        ok &= (p.energy - 4.0).abs() <= 1e-8;
        let r = &p.verification;
        ode = ode.max(r.ode_residual);
        rest = rest
            .max(r.jump_residuals.iter().cloned().fold(0.0, f64::max))
            .max(r.boundary_residuals[0])
            .max(r.boundary_residuals[1])
            .max(r.weak_residual);
    }
    ok &= rest <= 1e-8 && ode <= 1e-7;
    let signs: Vec<f64> = nontrivial
        .iter()
        .map(|p| p.node_values[0].signum())
        .collect();
    ok &= signs.contains(&1.0) && signs.contains(&-1.0);
    check(
        ok,
        format!(
            "slopes {slopes:?}; pair u = ±8 w_1 (u(1/2) = ±2, energy 4); jump/boundary/weak ≤ {rest:.1e}; ODE {ode:.1e} (rounding floor 1e-7)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let problem = example_problem();
    let cert = nontriviality_certificate(&problem).unwrap();
    let mut ok = cert.conclusion.as_str() == "guaranteed"
        && cert.slope_condition
        && cert.slope_witness.is_some()
        && cert.k_saddle == 7
        && !cert.conditional;

    let opts = SolverOptions::default();
    let basis = GalerkinBasis::with_modes(problem.mesh(), opts.modes).unwrap();
    let points = saddle_search(&problem, &basis, &opts).unwrap();
    let mut verified = 0;
    let mut worst_du = 0.0_f64;
    let mut worst_res = 0.0_f64;
    let mut worst_galerkin = 0.0_f64;
    for p in points.iter().filter(|p| !p.trivial) {
        let Some(s) = p.initial_slope else { continue };
        if p.verification.max() > 1e-6 {
            continue;
        }
        let width = 0.01 * s.abs().max(1.0);
        let found = bisect_solutions(&problem, (s - width, s + width), 200, 1e-13).unwrap();
        let Some(best) = found.iter().min_by(|a, b| {
            (a.initial_slope - s)
                .abs()
                .total_cmp(&(b.initial_slope - s).abs())
        }) else {
            continue;
        };
        let du = (best.node_values()[0] - p.node_values[0]).abs();
        let res = verify_trajectory(&problem, best).unwrap().max();
        if du <= 1e-5 && res <= 1e-6 {
            verified += 1;
            worst_du = worst_du.max(du);
            worst_galerkin =
                worst_galerkin.max((best.node_values()[0] - p.galerkin_node_values[0]).abs());
            worst_res = worst_res.max(p.verification.max());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= verified >= 1 && secs < 60.0;
    check(
        ok,
        format!(
            "guaranteed by the slope condition, k_saddle = {}; {verified} nontrivial points re-found by bisection, max |Δu(x_1)| = {worst_du:.1e} (Galerkin n = 32 values within {worst_galerkin:.1e}), max residual {worst_res:.1e}, {secs:.2} s",
            cert.k_saddle
        ),
    )
}

fn smallest_fd_eigenvalue(len: f64, h: f64) -> f64 {
    let n = (len / h).round() as usize - 1;
    let t = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 / (h * h),
        1 => -1.0 / (h * h),
        _ => 0.0,
    });
    SymmetricEigen::new(t).eigenvalues.min()
}

fn criterion_8() -> Outcome {
    let mesh = ImpulseMesh::new(&[0.25, 0.6]).unwrap();
    let hs = [1e-2, 5e-3, 2.5e-3];
    let mut orders = Vec::new();
    for (j, &len) in mesh.lengths().iter().enumerate() {
        let exact = subinterval_eigenvalue(&mesh, j, 1).unwrap();
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| (smallest_fd_eigenvalue(len, h) - exact).abs())
            .collect();
        for w in errs.windows(2) {
            orders.push((w[0] / w[1]).log2());
        }
    }
    let ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.4);
    check(
        ok,
        format!(
            "observed orders {:?}",
            orders
                .iter()
                .map(|p| (p * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ),
    )
}

fn criterion_9() -> Outcome {
    let problem = cubic_benchmark();
    let opts = SolverOptions::default();
    let basis8 = GalerkinBasis::with_modes(problem.mesh(), 8).unwrap();
    let start = saddle_search(&problem, &basis8, &opts)
        .unwrap()
        .into_iter()
        .find(|p| !p.trivial && p.node_values[0] > 0.0)
        .unwrap();
    let mut coeffs = start.coeffs.prolong(8);
    let mut values = Vec::new();
    for n in [8, 16, 32] {
        let basis = GalerkinBasis::with_modes(problem.mesh(), n).unwrap();
        let p = newton_critical_point(&problem, &basis, &coeffs.prolong(n), &opts).unwrap();
        if !p.converged {
            return Err(format!("Newton did not converge at n = {n}"));
        }
        values.push(p.galerkin_node_values[0]);
        coeffs = p.coeffs;
    }
    let d1 = (values[1] - values[0]).abs();
    let d2 = (values[2] - values[1]).abs();
    check(
        d2 <= d1 && d2 <= 1e-8,
        format!("u(x_1) = {values:?}, changes {d1:.1e}, {d2:.1e}"),
    )
}

fn criterion_10() -> Outcome {
    let problem = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems/example.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut reports = Vec::new();
    for dir in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_impulse-morse"))
            .args(["solve", "--seed", "11", "--problem"])
            .arg(&problem)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        if !status.status.success() {
            return Err(format!("solve exited with {:?}", status.status.code()));
        }
        reports.push(std::fs::read(dir.path().join("report.json")).unwrap());
    }
    check(
        reports[0] == reports[1],
        format!("two runs, {} bytes each, identical", reports[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("resonance oracle equivalence", criterion_1),
        ("determinant identity", criterion_2),
        ("known resonance points and thresholds", criterion_3),
        ("Morse index constant along paths", criterion_4),
        (
            "gradient and Hessian against finite differences",
            criterion_5,
        ),
        ("cubic impulse benchmark", criterion_6),
        ("nontriviality end to end", criterion_7),
        ("subinterval eigenvalue convergence", criterion_8),
        ("basis convergence", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("acceptance {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("acceptance {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
