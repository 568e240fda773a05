//! C interface to `impulse-morse`.
//!
//! Objects are opaque handles created by `im_*_new`/`im_problem_from_toml` and
//! released with the matching `*_free`. Every fallible call returns an
//! [`ImStatus`]; on failure [`im_last_error_message`] describes the error for
//! the calling thread. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use impulse_morse::app::{
    analyze_report, find_critical_points, parse_problem_str, solve_threshold, to_json, AppError,
    ParsedProblem, PointSummary, SolverSection,
};
use impulse_morse::resonance::{morse_report, resonance_det};
use impulse_morse::shooting::{linear_transfer, verify_samples, SampledSolution};
use impulse_morse::spectral::subinterval_eigenvalue;
use impulse_morse::{Error, ImpulseMesh};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    NoConvergence = 6,
    VerificationFailed = 7,
    Panic = 8,
}

/// Interior impulse points.
pub struct ImMesh(ImpulseMesh);

/// A validated problem file.
pub struct ImProblem(ParsedProblem);

struct Failure(ImStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NoCriticalPoints { .. } => ImStatus::NoConvergence,
            _ => ImStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        let status = match e {
            AppError::Io { .. } => ImStatus::Io,
            AppError::Parse { .. } => ImStatus::Parse,
            AppError::Schema(_) => ImStatus::Schema,
            AppError::NoConvergence(_) => ImStatus::NoConvergence,
            AppError::VerificationFailed { .. } => ImStatus::VerificationFailed,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ImStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ImStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ImStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ImStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn array<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(ImStatus::InvalidArgument, "string contains NUL".into()))
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn im_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `points` must hold `len` doubles and `out_mesh` must be writable.
#[no_mangle]
pub unsafe extern "C" fn im_mesh_new(
    points: *const f64,
    len: usize,
    out_mesh: *mut *mut ImMesh,
) -> ImStatus {
    guard(|| {
        let slot = out(out_mesh, "out_mesh")?;
        let mesh = ImpulseMesh::new(array(points, len, "points")?)?;
        *slot = Box::into_raw(Box::new(ImMesh(mesh)));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from [`im_mesh_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn im_mesh_free(mesh: *mut ImMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of interior points, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn im_mesh_node_count(mesh: *const ImMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.node_count())
}

/// Value of the representer `w_j` at `x`.
///
/// # Safety
/// `mesh` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn im_mesh_representer(
    mesh: *const ImMesh,
    j: usize,
    x: f64,
    out_value: *mut f64,
) -> ImStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        *out(out_value, "out_value")? = mesh.0.representer(j, x)?;
        Ok(())
    })
}

/// Writes the `m × m` Gram matrix row-major into `out_gram`, which must have
/// room for `capacity` doubles.
///
/// # Safety
/// `mesh` must be a live handle and `out_gram` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn im_mesh_gram(
    mesh: *const ImMesh,
    out_gram: *mut f64,
    capacity: usize,
) -> ImStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        let m = mesh.0.node_count();
        if capacity < m * m {
            return Err(Failure(
                ImStatus::InvalidArgument,
                format!("gram buffer holds {capacity} values, {} needed", m * m),
            ));
        }
        if out_gram.is_null() {
            return Err(null("out_gram"));
        }
        let dst = slice::from_raw_parts_mut(out_gram, m * m);
        let g = mesh.0.gram();
        for j in 0..m {
            for k in 0..m {
                dst[j * m + k] = g[(j, k)];
            }
        }
        Ok(())
    })
}

/// Dirichlet eigenvalue `k²π²/ℓ_j²` of subinterval `j`, `k ≥ 1`.
///
/// # Safety
/// `mesh` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn im_subinterval_eigenvalue(
    mesh: *const ImMesh,
    j: usize,
    k: usize,
    out_value: *mut f64,
) -> ImStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        *out(out_value, "out_value")? = subinterval_eigenvalue(&mesh.0, j, k)?;
        Ok(())
    })
}

/// `det(diag(b) G - I)` and whether `b` lies in the resonance set.
///
/// # Safety
/// `b` must hold `len` doubles; `out_det` and `out_in_b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn im_resonance_det(
    mesh: *const ImMesh,
    b: *const f64,
    len: usize,
    out_det: *mut f64,
    out_in_b: *mut bool,
) -> ImStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        let r = resonance_det(&mesh.0, array(b, len, "b")?)?;
        *out(out_det, "out_det")? = r.det;
        *out(out_in_b, "out_in_b")? = r.in_b;
        Ok(())
    })
}

/// Morse index `m₀` of zero. When `out_eigenvalues` is not null it receives the
/// `m` eigenvalues of the Hessian on `M` in ascending order.
///
/// # Safety
/// `b` must hold `len` doubles, `out_m0` must be writable and
/// `out_eigenvalues`, if not null, writable for `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn im_morse_index(
    mesh: *const ImMesh,
    b: *const f64,
    len: usize,
    out_m0: *mut usize,
    out_eigenvalues: *mut f64,
) -> ImStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        let r = morse_report(&mesh.0, array(b, len, "b")?)?;
        *out(out_m0, "out_m0")? = r.m0;
        if !out_eigenvalues.is_null() {
            slice::from_raw_parts_mut(out_eigenvalues, r.eigenvalues.len())
                .copy_from_slice(&r.eigenvalues);
        }
        Ok(())
    })
}

/// `u(1)` of the piecewise-linear solution with `u(0) = 0`, `u'(0) = 1`.
///
/// # Safety
/// `b` must hold `len` doubles and `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn im_linear_transfer(
    mesh: *const ImMesh,
    b: *const f64,
    len: usize,
    out_value: *mut f64,
) -> ImStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        *out(out_value, "out_value")? = linear_transfer(&mesh.0, array(b, len, "b")?)?;
        Ok(())
    })
}

/// Parses a problem file given as NUL-terminated TOML text.
///
/// # Safety
/// `toml` must be a valid C string and `out_problem` writable.
#[no_mangle]
pub unsafe extern "C" fn im_problem_from_toml(
    toml: *const c_char,
    out_problem: *mut *mut ImProblem,
) -> ImStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| Failure(ImStatus::Parse, format!("problem text is not UTF-8: {e}")))?;
        let parsed = parse_problem_str(text)?;
        *slot = Box::into_raw(Box::new(ImProblem(parsed)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`im_problem_from_toml`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn im_problem_free(problem: *mut ImProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Analysis report as JSON. Release the string with [`im_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn im_analyze_json(
    problem: *const ImProblem,
    out_json: *mut *mut c_char,
) -> ImStatus {
    guard(|| {
        let problem = borrow(problem, "problem")?;
        let slot = out(out_json, "out_json")?;
        let report = analyze_report(&problem.0, "analyze")?;
        let text = to_json(&report).map_err(|e| Failure(ImStatus::Io, e.to_string()))?;
        *slot = into_c_string(text)?;
        Ok(())
    })
}

/// Analysis plus the critical-point search as JSON, with the multistart seed
/// `seed`. Points are checked against `threshold` (raised to ten times the
/// gradient tolerance when smaller). Release the string with
/// [`im_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn im_solve_json(
    problem: *const ImProblem,
    seed: u64,
    threshold: f64,
    out_json: *mut *mut c_char,
) -> ImStatus {
    guard(|| {
        let problem = borrow(problem, "problem")?;
        let slot = out(out_json, "out_json")?;
        let mut report = analyze_report(&problem.0, "solve")?;
        let (opts, points) = find_critical_points(&problem.0, Some(seed))?;
        let threshold = solve_threshold(threshold, &opts);
        report.solver = Some(SolverSection {
            options: opts,
            threshold,
            k_saddle: report.spectral.k_saddle,
            critical_points: points
                .iter()
                .enumerate()
                .map(|(i, p)| PointSummary::new(i, p, threshold, None))
                .collect(),
        });
        let text = to_json(&report).map_err(|e| Failure(ImStatus::Io, e.to_string()))?;
        *slot = into_c_string(text)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn im_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Largest residual of the sampled function `u(xs[i]) = us[i]`. The samples
/// must include every mesh point.
///
/// # Safety
/// `xs` and `us` must hold `len` doubles; `out_max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn im_verify_samples(
    problem: *const ImProblem,
    xs: *const f64,
    us: *const f64,
    len: usize,
    out_max: *mut f64,
) -> ImStatus {
    guard(|| {
        let problem = borrow(problem, "problem")?;
        let samples = SampledSolution {
            xs: array(xs, len, "xs")?.to_vec(),
            us: array(us, len, "us")?.to_vec(),
        };
        *out(out_max, "out_max")? = verify_samples(&problem.0.problem, &samples)?.max();
        Ok(())
    })
}
