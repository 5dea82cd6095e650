//! C ABI for the `igpm` solver.
//!
//! Problems and results are opaque heap handles released with their
//! `_free` function. Every fallible call returns an [`IgpmStatus`]; on
//! failure the message is available from [`igpm_last_error`] on the same
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use igpm::gate::SubproblemContext;
use igpm::harness::{lipschitz, FIXED_STEP_FRACTION};
use igpm::linalg::{DenseMatrix, DenseVector, Matrix};
use igpm::objectives::{generate_instance, InstanceSpec, ProblemInstance, TauChoice};
use igpm::projection::{project_l1_exact, project_l1_inexact};
use igpm::solver::{solve, SolveOutcome, SolverConfig, Variant};
use igpm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgpmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    DegenerateDirection = 4,
    Internal = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgpmVariant {
    Gpm1 = 0,
    Gpm2 = 1,
    Igpm1 = 2,
    Igpm2 = 3,
}

/// Solver parameters. Fill with [`igpm_options_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IgpmOptions {
    pub variant: IgpmVariant,
    pub gamma: f64,
    pub omega0: f64,
    /// Stepsize; for fixed-step variants a value ≤ 0 selects `0.8 / λ̂`.
    pub beta: f64,
    pub eta: f64,
    pub theta: f64,
    pub alpha0: f64,
    pub eps: f64,
    pub max_outer: usize,
}

/// Aggregate statistics of a finished solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IgpmSummary {
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub backtracks: usize,
    pub objective: f64,
    pub final_residual: f64,
}

/// Opaque least-squares problem over the ℓ1 ball.
pub struct IgpmProblem(ProblemInstance);

/// Opaque solve result.
pub struct IgpmResult(SolveOutcome);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IgpmStatus {
    match e {
        Error::DimensionMismatch { .. } => IgpmStatus::DimensionMismatch,
        Error::DegenerateDirection { .. } => IgpmStatus::DegenerateDirection,
        Error::Contract(_) | Error::Parse { .. } | Error::Io { .. } => IgpmStatus::InvalidArgument,
        Error::Run { source, .. } => status_of(source),
        _ => IgpmStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (IgpmStatus, String)>) -> IgpmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IgpmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside igpm".into());
            IgpmStatus::Panic
        }
    }
}

fn lib<T>(r: igpm::Result<T>) -> Result<T, (IgpmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (IgpmStatus, String) {
    (IgpmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(
    p: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (IgpmStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread. Never null; empty when
/// no call has failed. Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn igpm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn igpm_options_default(variant: IgpmVariant) -> IgpmOptions {
    let d = SolverConfig::default();
    IgpmOptions {
        variant,
        gamma: d.gamma,
        omega0: d.omega0,
        beta: match variant {
            IgpmVariant::Gpm1 | IgpmVariant::Igpm1 => 0.0,
            _ => d.beta,
        },
        eta: d.eta,
        theta: d.theta,
        alpha0: d.alpha0,
        eps: d.eps,
        max_outer: d.max_outer,
    }
}

/// Draws a sparse-recovery instance with a dense Gaussian matrix.
/// `tau ≤ 0` selects `τ = s`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn igpm_problem_generate(
    n: usize,
    m: usize,
    s: usize,
    seed: u64,
    tau: f64,
    out: *mut *mut IgpmProblem,
) -> IgpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut spec = InstanceSpec::dense(n, m, s, seed);
        if tau > 0.0 {
            spec.tau = TauChoice::Fixed(tau);
        }
        let inst = lib(generate_instance(&spec))?;
        *out = Box::into_raw(Box::new(IgpmProblem(inst)));
        Ok(())
    })
}

/// Builds a problem from a row-major `m × n` matrix and a length-`m`
/// right-hand side.
///
/// # Safety
/// `a` must point to `m * n` doubles, `b` to `m` doubles, and `out` to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn igpm_problem_from_dense(
    m: usize,
    n: usize,
    a: *const f64,
    b: *const f64,
    tau: f64,
    out: *mut *mut IgpmProblem,
) -> IgpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = m
            .checked_mul(n)
            .ok_or((IgpmStatus::InvalidArgument, "m * n overflows".into()))?;
        let a = slice(a, len, "a")?.to_vec();
        let b = slice(b, m, "b")?.to_vec();
        let matrix = Matrix::from(lib(DenseMatrix::new(m, n, a))?);
        let inst = lib(ProblemInstance::new(matrix, lib(DenseVector::new(b))?, tau))?;
        *out = Box::into_raw(Box::new(IgpmProblem(inst)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn igpm_problem_free(p: *mut IgpmProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of unknowns of `p`, or 0 if `p` is null.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn igpm_problem_dim(p: *const IgpmProblem) -> usize {
    p.as_ref().map_or(0, |p| p.0.n())
}

/// Ball radius of `p`, or NaN if `p` is null.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn igpm_problem_tau(p: *const IgpmProblem) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.tau)
}

/// Copies the generating signal into `x` (length `len` = dimension).
///
/// # Safety
/// `p` must be a live problem handle and `x` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn igpm_problem_signal(
    p: *const IgpmProblem,
    x: *mut f64,
    len: usize,
) -> IgpmStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let truth = p.0.x_true.as_ref().ok_or((
            IgpmStatus::InvalidArgument,
            "problem has no generating signal".to_string(),
        ))?;
        copy_out(truth, x, len)
    })
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), (IgpmStatus, String)> {
    if len != src.len() {
        return Err((
            IgpmStatus::DimensionMismatch,
            format!("buffer holds {len} entries, need {}", src.len()),
        ));
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
    Ok(())
}

/// Solves `p` from `x₀ = 0`. A run that hits `max_outer` still succeeds;
/// check `converged` in the summary.
///
/// # Safety
/// `p` and `opts` must be live pointers and `out` writable storage for one
/// handle.
#[no_mangle]
pub unsafe extern "C" fn igpm_solve(
    p: *const IgpmProblem,
    opts: *const IgpmOptions,
    out: *mut *mut IgpmResult,
) -> IgpmStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let o = opts.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let variant = match o.variant {
            IgpmVariant::Gpm1 => Variant::Gpm1,
            IgpmVariant::Gpm2 => Variant::Gpm2,
            IgpmVariant::Igpm1 => Variant::Igpm1,
            IgpmVariant::Igpm2 => Variant::Igpm2,
        };
        let mut beta = o.beta;
        if !variant.line_search() && beta <= 0.0 {
            beta = FIXED_STEP_FRACTION / lib(lipschitz(&p.0))?;
        }
        let cfg = SolverConfig {
            variant,
            gamma: o.gamma,
            omega0: o.omega0,
            beta,
            eta: o.eta,
            theta: o.theta,
            alpha0: o.alpha0,
            eps: o.eps,
            max_outer: o.max_outer,
            ..SolverConfig::default()
        };
        let outcome = lib(solve(&p.0, p.0.tau, &DenseVector::zeros(p.0.n()), &cfg))?;
        *out = Box::into_raw(Box::new(IgpmResult(outcome)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn igpm_result_free(r: *mut IgpmResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn igpm_result_summary(
    r: *const IgpmResult,
    out: *mut IgpmSummary,
) -> IgpmStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = IgpmSummary {
            converged: r.converged,
            outer_iterations: r.trace.outer_iterations(),
            inner_iterations: r.trace.total_inner(),
            backtracks: r.trace.total_backtracks(),
            objective: r.f,
            final_residual: r.final_residual,
        };
        Ok(())
    })
}

/// Copies the solution into `x` (length `len` = dimension).
///
/// # Safety
/// `r` must be a live result handle and `x` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn igpm_result_x(
    r: *const IgpmResult,
    x: *mut f64,
    len: usize,
) -> IgpmStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.0.x, x, len)
    })
}

/// Projects `v` onto `{‖z‖₁ ≤ τ}`. With `gamma < 1` the inexact solver may
/// stop early. `inner` (nullable) receives the inner iteration count.
///
/// # Safety
/// `v` and `z` must point to `n` doubles (`z` writable); `inner` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn igpm_project_l1(
    v: *const f64,
    n: usize,
    tau: f64,
    gamma: f64,
    z: *mut f64,
    inner: *mut usize,
) -> IgpmStatus {
    guard(|| {
        let v = lib(DenseVector::new(slice(v, n, "v")?.to_vec()))?;
        let res = if gamma >= 1.0 {
            lib(project_l1_exact(&v, tau))?
        } else {
            let ctx = lib(SubproblemContext::for_point(v, tau, 0.0))?;
            lib(project_l1_inexact(&ctx, gamma))?
        };
        copy_out(&res.z, z, n)?;
        if let Some(inner) = inner.as_mut() {
            *inner = res.inner_iterations;
        }
        Ok(())
    })
}
