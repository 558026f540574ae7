//! C interface to `auxbound`.
//!
//! Objects are opaque handles created by `ab_*_new`/`ab_compute_*` functions
//! and released with the matching `ab_*_free`. Every fallible function
//! returns an [`AbStatus`]; on failure a message is available from
//! [`ab_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use auxbound::bounds::{compute_bound, BoundOptions, BoundResult};
use auxbound::cli::ProblemFile;
use auxbound::grid::Grid;
use auxbound::sdp::SolverStatus;
use auxbound::system::{builtin_problem, BuiltinParams, ProblemSpec};
use auxbound::trajectories::{check_certificate, lower_bound, LowerBoundOptions, PolynomialAux};
use auxbound::Error;

/// Return codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InvalidProblem = 4,
    SolverError = 5,
    NumericalError = 6,
    IoError = 7,
    Panic = 8,
}

/// Solver outcome of a bound computation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbSolverStatus {
    Optimal = 0,
    PrimalInfeasible = 1,
    DualInfeasible = 2,
    SlowProgress = 3,
    IterationLimit = 4,
}

impl From<SolverStatus> for AbSolverStatus {
    fn from(s: SolverStatus) -> Self {
        match s {
            SolverStatus::Optimal => AbSolverStatus::Optimal,
            SolverStatus::PrimalInfeasible => AbSolverStatus::PrimalInfeasible,
            SolverStatus::DualInfeasible => AbSolverStatus::DualInfeasible,
            SolverStatus::SlowProgress => AbSolverStatus::SlowProgress,
            SolverStatus::IterationLimit => AbSolverStatus::IterationLimit,
        }
    }
}

/// A bounding problem.
pub struct AbProblem(ProblemSpec);

/// The outcome of a bound computation.
pub struct AbBound(BoundResult);

/// Result of a certificate check.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AbCheckReport {
    pub max_lie_violation: f64,
    pub max_phi_violation: f64,
    pub grid_size: usize,
    pub pass: bool,
}

/// Result of a lower-bound search.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AbLowerBound {
    pub value: f64,
    pub time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn code(e: &Error) -> AbStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => AbStatus::ParseError,
        Error::InvalidProblem(_)
        | Error::UnknownBuiltin(_)
        | Error::UnknownVariable(_)
        | Error::VariableMismatch(_)
        | Error::MissingAssignment(_)
        | Error::Usage(_) => AbStatus::InvalidProblem,
        Error::Solver(_) => AbStatus::SolverError,
        Error::Integration { .. } | Error::Numerical(_) => AbStatus::NumericalError,
        Error::Io(_) => AbStatus::IoError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), AbStatus>) -> AbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            AbStatus::Panic
        }
    }
}

fn fail(e: Error) -> AbStatus {
    let c = code(&e);
    set_error(e.to_string());
    c
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, AbStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(AbStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        AbStatus::InvalidArgument
    })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, AbStatus> {
    p.as_mut().ok_or_else(|| {
        set_error(format!("{what} is null"));
        AbStatus::NullPointer
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, AbStatus> {
    p.as_ref().ok_or_else(|| {
        set_error(format!("{what} is null"));
        AbStatus::NullPointer
    })
}

/// Copies `s` into `buf` (NUL-terminated, truncated to `len`) and returns the
/// full length excluding the terminator.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize) -> usize {
    if !buf.is_null() && len > 0 {
        let n = s.len().min(len - 1);
        ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    s.len()
}

/// Copies the last error message of this thread into `buf` and returns its
/// full length; 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => copy_out(msg.to_str().unwrap_or(""), buf, len),
        None => copy_out("", buf, len),
    })
}

/// Instantiates a builtin problem with default parameters.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ab_problem_builtin(name: *const c_char, out: *mut *mut AbProblem) -> AbStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let spec = builtin_problem(name, &BuiltinParams::default()).map_err(fail)?;
        *out = Box::into_raw(Box::new(AbProblem(spec)));
        Ok(())
    })
}

/// Parses a JSON problem file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ab_problem_from_json(json: *const c_char, out: *mut *mut AbProblem) -> AbStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let spec = ProblemFile::from_json(json).and_then(|f| f.to_spec()).map_err(fail)?;
        *out = Box::into_raw(Box::new(AbProblem(spec)));
        Ok(())
    })
}

/// Number of state variables.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ab_problem_nstate(problem: *const AbProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.nstate())
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ab_problem_free(problem: *mut AbProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Computes an SOS upper bound with a degree-`degree` auxiliary function.
/// A non-optimal solver outcome is still `AB_STATUS_OK`; inspect it with
/// [`ab_bound_status`].
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ab_compute_bound(
    problem: *const AbProblem,
    degree: u32,
    time_independent: bool,
    gap_tol: f64,
    out: *mut *mut AbBound,
) -> AbStatus {
    guard(|| {
        let spec = &handle(problem, "problem")?.0;
        let out = out_arg(out, "out")?;
        if !(gap_tol > 0.0) {
            set_error("gap_tol must be positive".into());
            return Err(AbStatus::InvalidArgument);
        }
        let opts = BoundOptions::new(degree).time_independent(time_independent).gap_tol(gap_tol);
        let r = compute_bound(spec, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(AbBound(r)));
        Ok(())
    })
}

/// # Safety
/// `bound` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ab_bound_lambda(bound: *const AbBound) -> f64 {
    bound.as_ref().map_or(f64::NAN, |b| b.0.lambda)
}

/// # Safety
/// `bound` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ab_bound_status(bound: *const AbBound) -> AbSolverStatus {
    bound
        .as_ref()
        .map_or(AbSolverStatus::IterationLimit, |b| b.0.status.into())
}

/// Copies the auxiliary function as polynomial text into `buf` and returns
/// its full length.
///
/// # Safety
/// `bound` must be a live handle; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ab_bound_v(bound: *const AbBound, buf: *mut c_char, len: usize) -> usize {
    match bound.as_ref() {
        Some(b) => copy_out(&b.0.v.to_string(), buf, len),
        None => 0,
    }
}

/// # Safety
/// `bound` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ab_bound_free(bound: *mut AbBound) {
    if !bound.is_null() {
        drop(Box::from_raw(bound));
    }
}

/// Multistart search for the largest `Φ` along trajectories from `X0`.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ab_lower_bound(
    problem: *const AbProblem,
    starts: usize,
    seed: u64,
    out: *mut AbLowerBound,
) -> AbStatus {
    guard(|| {
        let spec = &handle(problem, "problem")?.0;
        let out = out_arg(out, "out")?;
        let opts = LowerBoundOptions {
            starts: starts.max(1),
            seed,
            ..Default::default()
        };
        let r = lower_bound(spec, &opts).map_err(fail)?;
        *out = AbLowerBound {
            value: r.value,
            time: r.time,
        };
        Ok(())
    })
}

/// Checks a polynomial auxiliary function on a grid. `box_spec` is
/// `"lo:hi,..."` over `t,x` or `x`; `res_spec` is `"n,..."` or one `"n"`.
///
/// # Safety
/// String arguments must be NUL-terminated; `problem` live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ab_check_certificate(
    problem: *const AbProblem,
    v: *const c_char,
    box_spec: *const c_char,
    res_spec: *const c_char,
    tol: f64,
    out: *mut AbCheckReport,
) -> AbStatus {
    guard(|| {
        let spec = &handle(problem, "problem")?.0;
        let v = str_arg(v, "v")?;
        let box_spec = str_arg(box_spec, "box_spec")?;
        let res_spec = str_arg(res_spec, "res_spec")?;
        let out = out_arg(out, "out")?;
        let poly = auxbound::parse(v, spec.vars()).map_err(fail)?;
        let grid = Grid::parse(box_spec, res_spec).map_err(fail)?;
        let aux = PolynomialAux::new(&poly, spec).map_err(fail)?;
        let r = check_certificate(&aux, spec, &grid, tol).map_err(fail)?;
        *out = AbCheckReport {
            max_lie_violation: r.max_lie_violation,
            max_phi_violation: r.max_phi_violation,
            grid_size: r.grid_size,
            pass: r.pass,
        };
        Ok(())
    })
}
