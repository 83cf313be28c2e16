//! C ABI over `mems-core`.
//!
//! Conventions:
//! - Every fallible call returns a [`MemsStatus`]; `MEMS_OK` is zero.
//! - On failure the message is kept per thread and read back with
//!   [`mems_last_error`].
//! - A [`MemsModel`] handle owns the parameters and grids. Create it with
//!   [`mems_model_new`], release it with [`mems_model_free`].
//! - Deflections are passed as `n` node values on the uniform grid over
//!   `[-1, 1]`. Output arrays are caller-allocated with the stated length.
//! - Output pointers documented as optional may be null.
//!
//! # Safety
//!
//! Handles must come from `mems_model_new` and not be used after
//! `mems_model_free`. Array pointers must be null (where allowed) or valid
//! for `len` doubles; `out` and scalar outputs must be null or writable.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mems_core::continuation::{continue_branch, NewtonOptions};
use mems_core::energy::{electrostatics, energy_bounds};
use mems_core::model::{mechanical_energy, DeflectionProfile, Grid1D, Grid2D, ModelParams};
use mems_core::optimizer::{minimize_mechanical, OptimizerOptions};
use mems_core::spectral::clamped_eigenpair;
use mems_core::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemsStatus {
    MemsOk = 0,
    /// A required pointer was null.
    MemsErrNull = 1,
    /// Bad parameter, length or configuration.
    MemsErrInvalid = 2,
    /// The deflection reaches the ground plate.
    MemsErrTouchdown = 3,
    /// An iterative solver stopped short of its tolerance.
    MemsErrNoConvergence = 4,
    /// A linear system was singular.
    MemsErrSingular = 5,
    /// A Rust panic was caught at the boundary.
    MemsErrInternal = 6,
}

/// Opaque model handle.
pub struct MemsModel {
    params: ModelParams,
    line: Grid1D,
    grid: Grid2D,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MemsStatus {
    match e {
        Error::Touchdown { .. } => MemsStatus::MemsErrTouchdown,
        Error::Singular { .. } => MemsStatus::MemsErrSingular,
        Error::NonConvergence { .. }
        | Error::OutOfBracket { .. }
        | Error::BranchIncomplete { .. }
        | Error::DegenerateMultiplier => MemsStatus::MemsErrNoConvergence,
        Error::Io(_) | Error::Json(_) => MemsStatus::MemsErrInternal,
        _ => MemsStatus::MemsErrInvalid,
    }
}

/// Runs `f`, records any error or panic, and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MemsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MemsStatus::MemsOk
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            MemsStatus::MemsErrInternal
        }
    }
}

struct Failure(MemsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MemsStatus::MemsErrNull, format!("`{what}` is null"))
}

fn model_ref<'a>(m: *const MemsModel) -> Result<&'a MemsModel, Failure> {
    // SAFETY: non-null handles come from `mems_model_new` and stay valid
    // until `mems_model_free`.
    unsafe { m.as_ref() }.ok_or_else(|| null("model"))
}

fn input<'a>(
    p: *const f64,
    len: usize,
    model: &MemsModel,
    what: &str,
) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    check_len(len, model, what)?;
    // SAFETY: caller promises `len` readable values.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn output<'a>(
    p: *mut f64,
    len: usize,
    model: &MemsModel,
    what: &str,
) -> Result<Option<&'a mut [f64]>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    check_len(len, model, what)?;
    // SAFETY: caller promises `len` writable values.
    Ok(Some(unsafe { std::slice::from_raw_parts_mut(p, len) }))
}

fn check_len(len: usize, model: &MemsModel, what: &str) -> Result<(), Failure> {
    if len == model.line.len() {
        Ok(())
    } else {
        Err(Failure(
            MemsStatus::MemsErrInvalid,
            format!(
                "`{what}` has length {len}, the model has {} nodes",
                model.line.len()
            ),
        ))
    }
}

fn put(p: *mut f64, v: f64) {
    if !p.is_null() {
        // SAFETY: non-null scalar outputs point to writable doubles.
        unsafe { *p = v };
    }
}

fn profile(model: &MemsModel, u: *const f64, len: usize) -> Result<DeflectionProfile, Failure> {
    let values = input(u, len, model, "u")?;
    Ok(DeflectionProfile::new(model.line, values.to_vec())?)
}

/// Create a model. `n` is the odd number of plate nodes (at least 5);
/// `neta` the odd number of nodes across the gap, or 0 for the default
/// `(n+1)/2`.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_model_new(
    beta: f64,
    tau: f64,
    a: f64,
    epsilon: f64,
    n: usize,
    neta: usize,
    out: *mut *mut MemsModel,
) -> MemsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ModelParams::new(beta, tau, a, epsilon)?;
        let line = Grid1D::new(n)?;
        let grid = if neta == 0 {
            Grid2D::for_line(line)
        } else {
            Grid2D::new(line, neta)?
        };
        let handle = Box::into_raw(Box::new(MemsModel { params, line, grid }));
        // SAFETY: checked non-null above.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_model_free(model: *mut MemsModel) {
    if !model.is_null() {
        // SAFETY: the handle was produced by `Box::into_raw` in
        // `mems_model_new` and is released once.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of plate nodes, or 0 for a null handle.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_model_nodes(model: *const MemsModel) -> usize {
    model_ref(model).map(|m| m.line.len()).unwrap_or(0)
}

/// Node coordinates into `x[len]`.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_model_nodes_x(
    model: *const MemsModel,
    x: *mut f64,
    len: usize,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = output(x, len, m, "x")?.ok_or_else(|| null("x"))?;
        out.copy_from_slice(&m.line.nodes());
        Ok(())
    })
}

/// First clamped eigenpair. `phi` (optional) receives the eigenfunction
/// normalized to minimum −1.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_eigenpair(
    model: *const MemsModel,
    mu1: *mut f64,
    phi: *mut f64,
    len: usize,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = output(phi, len, m, "phi")?;
        let e = clamped_eigenpair(&m.params, &m.line)?;
        put(mu1, e.mu1);
        if let Some(o) = out {
            o.copy_from_slice(e.phi1.values());
        }
        Ok(())
    })
}

/// Electrostatic energy of `u` and, optionally, the traction `g[len]`.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_electrostatics(
    model: *const MemsModel,
    u: *const f64,
    len: usize,
    energy: *mut f64,
    g: *mut f64,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        let u = profile(m, u, len)?;
        let out = output(g, len, m, "g")?;
        let es = electrostatics(&u, &m.params, &m.grid)?;
        put(energy, es.energy);
        if let Some(o) = out {
            o.copy_from_slice(&es.g);
        }
        Ok(())
    })
}

/// One-dimensional lower and upper bounds on the electrostatic energy.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_energy_bounds(
    model: *const MemsModel,
    u: *const f64,
    len: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        let (lo, up) = energy_bounds(&profile(m, u, len)?, &m.params)?;
        put(lower, lo);
        put(upper, up);
        Ok(())
    })
}

/// Mechanical energy of `u`.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_mechanical_energy(
    model: *const MemsModel,
    u: *const f64,
    len: usize,
    energy: *mut f64,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        put(energy, mechanical_energy(&profile(m, u, len)?, &m.params)?);
        Ok(())
    })
}

/// Minimize the mechanical energy at electrostatic energy `rho > 2`.
/// Writes the minimizer into `u[len]`. `kkt_tol <= 0` selects the default.
/// Returns `MEMS_ERR_NO_CONVERGENCE` if the tolerance is not met; the
/// outputs are written in that case too.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_minimize(
    model: *const MemsModel,
    rho: f64,
    kkt_tol: f64,
    u: *mut f64,
    len: usize,
    lambda: *mut f64,
    mechanical: *mut f64,
    kkt_residual: *mut f64,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = output(u, len, m, "u")?;
        let mut opts = OptimizerOptions::default();
        if kkt_tol > 0.0 {
            opts.kkt_tol = kkt_tol;
        }
        let r = minimize_mechanical(rho, &m.params, &m.grid, &opts)?;
        if let Some(o) = out {
            o.copy_from_slice(r.u_rho.values());
        }
        put(lambda, r.lambda_rho);
        put(mechanical, r.e_m);
        put(kkt_residual, r.kkt_residual);
        r.require_converged()?;
        Ok(())
    })
}

/// Follow the small-voltage branch from `λ = 0` to `lambda_max` in
/// `steps` steps. Writes the last solution reached into `u[len]` and its
/// voltage into `reached`; fails with `MEMS_ERR_NO_CONVERGENCE` if that
/// falls short of `lambda_max`.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_branch(
    model: *const MemsModel,
    lambda_max: f64,
    steps: usize,
    u: *mut f64,
    len: usize,
    reached: *mut f64,
    electrostatic: *mut f64,
) -> MemsStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = output(u, len, m, "u")?;
        let b = continue_branch(
            lambda_max,
            steps,
            &m.params,
            &m.grid,
            &NewtonOptions::default(),
        )?;
        let last = b.points.last().expect("branch starts at zero");
        if let Some(o) = out {
            o.copy_from_slice(last.u.values());
        }
        put(reached, last.lambda);
        put(electrostatic, last.e_e);
        if !b.complete() {
            return Err(Error::BranchIncomplete {
                reached: b.reached(),
                target: b.target,
            }
            .into());
        }
        Ok(())
    })
}

/// Copy the calling thread's last error message into `buf[cap]`,
/// truncated and NUL-terminated. Returns the full message length in bytes,
/// excluding the terminator; empty after a successful call.
///
/// # Safety
/// Pointers must satisfy the conventions in the crate documentation.
#[no_mangle]
pub unsafe extern "C" fn mems_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            // SAFETY: caller provides `cap` writable bytes.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn mems_status_str(status: MemsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        MemsStatus::MemsOk => c"ok",
        MemsStatus::MemsErrNull => c"null pointer argument",
        MemsStatus::MemsErrInvalid => c"invalid argument",
        MemsStatus::MemsErrTouchdown => c"touchdown",
        MemsStatus::MemsErrNoConvergence => c"no convergence",
        MemsStatus::MemsErrSingular => c"singular system",
        MemsStatus::MemsErrInternal => c"internal error",
    };
    s.as_ptr()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mems_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
