use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cli::{Args, Command, SweepParam};
use super::problem_file::{parse_problem_file, ParsedProblem};
use super::report::{format_float, to_json, PointSummary, RunReport, SolverSection, Timing};
use super::samples::{read_solution_csv, write_solution_csv, SOLUTION_ROWS};
use super::AppError;
use crate::error::Error;
use crate::galerkin::{GalerkinBasis, ProblemSpec};
use crate::resonance::{morse_report, nontriviality_certificate, resonance_det};
use crate::shooting::{
    sample_shot, solution_grid, verify_samples, SampledSolution, DEFAULT_INTEGRATOR_TOL,
};
use crate::solver::{saddle_search, CriticalPoint, SolverOptions};
use crate::spectral::{spectral_report, DEFAULT_REL_TOL};

fn schema(e: Error) -> AppError {
    AppError::Schema(e.to_string())
}

/// Everything except the solver section.
pub fn analyze_report(parsed: &ParsedProblem, command: &str) -> Result<RunReport, AppError> {
    let p = &parsed.problem;
    let mesh = p.mesh();
    Ok(RunReport {
        command: command.into(),
        problem: parsed.file.clone(),
        spectral: spectral_report(mesh, p.a(), DEFAULT_REL_TOL).map_err(schema)?,
        resonance: resonance_det(mesh, p.b()).map_err(schema)?,
        morse: morse_report(mesh, p.b()).map_err(schema)?,
        certificate: if parsed.check_certificate {
            Some(nontriviality_certificate(p).map_err(schema)?)
        } else {
            None
        },
        solver: None,
        timing: None,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, AppError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(AppError::Schema("--jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| AppError::Schema(format!("--jobs: {e}")))
}

fn point_samples(
    problem: &ProblemSpec,
    point: &CriticalPoint,
) -> Result<SampledSolution, AppError> {
    let xs = solution_grid(problem.mesh(), SOLUTION_ROWS);
    if let Some(s) = point.initial_slope {
        if let Ok(samples) = sample_shot(problem, s, &xs, DEFAULT_INTEGRATOR_TOL) {
            return Ok(samples);
        }
    }
    let basis = GalerkinBasis::with_modes(problem.mesh(), point.coeffs.modes()).map_err(schema)?;
    let us = xs
        .iter()
        .map(|&x| basis.eval_u(&point.coeffs, x))
        .collect::<Result<_, _>>()
        .map_err(schema)?;
    Ok(SampledSolution { xs, us })
}

/// Multistart search with the file's solver options, `seed` overriding
/// `solver.seed`.
pub fn find_critical_points(
    parsed: &ParsedProblem,
    seed: Option<u64>,
) -> Result<(SolverOptions, Vec<CriticalPoint>), AppError> {
    let mut opts = parsed.solver.clone();
    if let Some(seed) = seed {
        opts.seed = seed;
    }
    let problem = &parsed.problem;
    let q = opts
        .quad_order
        .unwrap_or_else(|| crate::galerkin::default_quad_order(opts.modes));
    let basis = GalerkinBasis::new(problem.mesh(), opts.modes, q).map_err(schema)?;
    match saddle_search(problem, &basis, &opts) {
        Ok(points) => Ok((opts, points)),
        Err(Error::NoCriticalPoints { starts }) => Err(AppError::NoConvergence(format!(
            "none of {starts} starts reached gradient norm {:e}",
            opts.gradient_tol
        ))),
        Err(e @ Error::MissingDerivative { .. }) => Err(schema(e)),
        Err(e) => Err(AppError::NoConvergence(e.to_string())),
    }
}

/// Residual threshold applied to solver output.
pub fn solve_threshold(requested: f64, opts: &SolverOptions) -> f64 {
    requested.max(10.0 * opts.gradient_tol)
}

fn solve(args: &Args, parsed: &ParsedProblem, report: &mut RunReport) -> Result<(), AppError> {
    let problem = &parsed.problem;
    let (opts, points) = pool(args.jobs)?.install(|| find_critical_points(parsed, args.seed))?;
    let threshold = solve_threshold(args.threshold, &opts);

    let mut summaries = Vec::with_capacity(points.len());
    for (i, point) in points.iter().enumerate() {
        let file = if point.trivial {
            None
        } else {
            let name = format!("solution_{i}.csv");
            write_solution_csv(&args.out.join(&name), &point_samples(problem, point)?)?;
            Some(name)
        };
        summaries.push(PointSummary::new(i, point, threshold, file));
    }
    let k_saddle = report.spectral.k_saddle;
    report.solver = Some(SolverSection {
        options: opts,
        threshold,
        k_saddle,
        critical_points: summaries,
    });
    Ok(())
}

fn verify(args: &Args, parsed: &ParsedProblem) -> Result<(), AppError> {
    let path = args
        .solution
        .as_ref()
        .ok_or_else(|| AppError::Schema("verify needs --solution FILE".into()))?;
    let samples = read_solution_csv(path)?;
    let residuals = verify_samples(&parsed.problem, &samples).map_err(schema)?;
    #[derive(Serialize)]
    struct VerifyReport<'a> {
        solution: String,
        threshold: f64,
        passes: bool,
        residuals: &'a crate::shooting::ResidualReport,
    }
    let passes = residuals.passes(args.threshold);
    let text = to_json(&VerifyReport {
        solution: path.display().to_string(),
        threshold: args.threshold,
        passes,
        residuals: &residuals,
    })
    .map_err(|e| AppError::io(path, e))?;
    write_text(&args.out.join("verify.json"), &text)?;
    print!("{text}");
    if passes {
        Ok(())
    } else {
        Err(AppError::VerificationFailed {
            max: residuals.max(),
            threshold: args.threshold,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub param2: Option<f64>,
    pub det: f64,
    pub m0: usize,
    pub conclusion: String,
}

fn parse_range(flag: &str, text: Option<&str>) -> Result<(f64, f64), AppError> {
    let text = text.ok_or_else(|| AppError::Schema(format!("sweep needs --{flag} LO:HI")))?;
    let bad = || AppError::Schema(format!("--{flag}: expected LO:HI, found `{text}`"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

fn with_param(
    problem: &ProblemSpec,
    which: SweepParam,
    index: usize,
    value: f64,
) -> Result<ProblemSpec, AppError> {
    let (name, mut values) = match which {
        SweepParam::A => ("a", problem.a().to_vec()),
        SweepParam::B => ("b", problem.b().to_vec()),
    };
    let len = values.len();
    let slot = values.get_mut(index).ok_or_else(|| {
        AppError::Schema(format!(
            "sweep index {index} out of range for `{name}` of length {len}"
        ))
    })?;
    *slot = value;
    match which {
        SweepParam::A => problem.clone().with_a(values),
        SweepParam::B => problem.clone().with_b(values),
    }
    .map_err(schema)
}

/// Grid scan of `det`, `m₀` and the certificate over one or two parameters.
pub fn run_sweep(args: &Args, problem: &ProblemSpec) -> Result<Vec<SweepRow>, AppError> {
    let (lo, hi) = parse_range("sweep-range", args.sweep_range.as_deref())?;
    if args.sweep_steps == 0 {
        return Err(AppError::Schema("--sweep-steps must be at least 1".into()));
    }
    let first = grid(lo, hi, args.sweep_steps);
    let second: Option<(SweepParam, Vec<f64>)> = match args.sweep2_param {
        Some(which) => {
            let (lo2, hi2) = parse_range("sweep2-range", args.sweep2_range.as_deref())?;
            if args.sweep2_steps == 0 {
                return Err(AppError::Schema("--sweep2-steps must be at least 1".into()));
            }
            Some((which, grid(lo2, hi2, args.sweep2_steps)))
        }
        None => None,
    };
    let mut cells: Vec<(f64, Option<f64>)> = Vec::new();
    for &p in &first {
        match &second {
            Some((_, ys)) => cells.extend(ys.iter().map(|&q| (p, Some(q)))),
            None => cells.push((p, None)),
        }
    }
    // validate indices once before fanning out
    with_param(problem, args.sweep_param, args.sweep_index, first[0])?;
    if let Some((which, ys)) = &second {
        with_param(problem, *which, args.sweep2_index, ys[0])?;
    }

    pool(args.jobs)?.install(|| {
        cells
            .par_iter()
            .map(|&(p, q)| {
                let mut inst = with_param(problem, args.sweep_param, args.sweep_index, p)?;
                if let (Some((which, _)), Some(q)) = (&second, q) {
                    inst = with_param(&inst, *which, args.sweep2_index, q)?;
                }
                let mesh = inst.mesh();
                let det = resonance_det(mesh, inst.b()).map_err(schema)?;
                let morse = morse_report(mesh, inst.b()).map_err(schema)?;
                let cert = nontriviality_certificate(&inst).map_err(schema)?;
                Ok(SweepRow {
                    param: p,
                    param2: q,
                    det: det.det,
                    m0: morse.m0,
                    conclusion: cert.conclusion.as_str().into(),
                })
            })
            .collect()
    })
}

fn write_sweep(path: &Path, rows: &[SweepRow], two: bool) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::io(path, e))?;
    let header: &[&str] = if two {
        &["param", "param2", "det", "m0", "conclusion"]
    } else {
        &["param", "det", "m0", "conclusion"]
    };
    w.write_record(header).map_err(|e| AppError::io(path, e))?;
    for r in rows {
        let mut rec = vec![format_float(r.param)];
        if let Some(q) = r.param2 {
            rec.push(format_float(q));
        }
        rec.extend([format_float(r.det), r.m0.to_string(), r.conclusion.clone()]);
        w.write_record(&rec).map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn summary(report: &RunReport) {
    println!(
        "det = {}, m0 = {}, k_saddle = {}",
        format_float(report.resonance.det),
        report.morse.m0,
        report.spectral.k_saddle
    );
    if let Some(c) = &report.certificate {
        println!(
            "certificate: {}{}",
            c.conclusion.as_str(),
            if c.conditional {
                " (conditional on assumed hypotheses)"
            } else {
                ""
            }
        );
    }
    if let Some(s) = &report.solver {
        for p in &s.critical_points {
            println!(
                "point {}: u(x_j) = {:?}, energy = {}, negatives = {}, max residual = {:e}",
                p.index,
                p.node_values,
                format_float(p.energy),
                p.inertia.negatives,
                p.residuals.max()
            );
        }
    }
}

pub fn run(args: &Args) -> Result<(), AppError> {
    let start = Instant::now();
    let parsed = parse_problem_file(&args.problem)?;
    fs::create_dir_all(&args.out).map_err(|e| AppError::io(&args.out, e))?;
    match args.command {
        Command::Verify => verify(args, &parsed),
        Command::Sweep => {
            let rows = run_sweep(args, &parsed.problem)?;
            let path = args.out.join("sweep.csv");
            write_sweep(&path, &rows, args.sweep2_param.is_some())?;
            println!("{} rows written to {}", rows.len(), path.display());
            Ok(())
        }
        Command::Analyze | Command::Solve => {
            let name = if args.command == Command::Solve {
                "solve"
            } else {
                "analyze"
            };
            let mut report = analyze_report(&parsed, name)?;
            let solved = if args.command == Command::Solve {
                solve(args, &parsed, &mut report)
            } else {
                Ok(())
            };
            if args.timing {
                report.timing = Some(Timing {
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
            let path = args.out.join("report.json");
            write_text(
                &path,
                &to_json(&report).map_err(|e| AppError::io(&path, e))?,
            )?;
            solved?;
            summary(&report);
            if let Some(s) = &report.solver {
                if let Some(bad) = s.critical_points.iter().find(|p| !p.passes_threshold) {
                    return Err(AppError::VerificationFailed {
                        max: bad.residuals.max(),
                        threshold: s.threshold,
                    });
                }
            }
            Ok(())
        }
    }
}
