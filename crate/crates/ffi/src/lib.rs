//! C ABI for `gausschan`.
//!
//! Every function returns a [`GcStatus`]; results are written through out
//! pointers. On failure the message is available from
//! [`gc_last_error_message`] on the same thread. Matrices cross the boundary
//! as 16 doubles in row-major order, modes ordered (xA, pA, xB, pB).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gausschan::channel::GaussianChannel;
use gausschan::error::Error;
use gausschan::numcore::Mat4;
use gausschan::report::evaluate;
use gausschan::state::{repair, CovarianceMatrix};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Internal = 3,
    Panic = 4,
}

/// Opaque covariance-matrix handle.
pub struct GcCovariance(CovarianceMatrix);

/// Channel quantities of one covariance matrix. Unavailable values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GcReport {
    pub lambda: f64,
    pub lambda_ta: f64,
    pub witness: f64,
    pub log_negativity: f64,
    pub q_lower_bound: f64,
    pub fidelity: f64,
    pub purity: f64,
    pub key_rate: f64,
    /// 1 if the input satisfies the uncertainty principle.
    pub physical: i32,
    /// 1 if the witness optimization reached its tolerance.
    pub witness_converged: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), GcStatus>) -> GcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside gausschan".into());
            GcStatus::Panic
        }
    }
}

fn fail(e: Error) -> GcStatus {
    set_error(e.to_string());
    if e.is_internal() {
        GcStatus::Internal
    } else {
        GcStatus::InvalidInput
    }
}

fn null(what: &str) -> GcStatus {
    set_error(format!("null pointer: {what}"));
    GcStatus::NullPointer
}

unsafe fn read_mat(p: *const f64, what: &str) -> Result<Mat4, GcStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 16);
    Ok(Mat4::from_fn(|i, j| s[4 * i + j]))
}

unsafe fn handle<'a>(p: *const GcCovariance, what: &str) -> Result<&'a CovarianceMatrix, GcStatus> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), GcStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn boxed(g: CovarianceMatrix) -> *mut GcCovariance {
    Box::into_raw(Box::new(GcCovariance(g)))
}

/// Creates a covariance matrix from 16 row-major doubles.
///
/// # Safety
/// `values` must point to 16 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_covariance_new(values: *const f64, out: *mut *mut GcCovariance) -> GcStatus {
    guard(|| {
        let m = read_mat(values, "values")?;
        let g = CovarianceMatrix::new(m).map_err(fail)?;
        put(out, boxed(g), "out")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `cm` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_covariance_free(cm: *mut GcCovariance) {
    if !cm.is_null() {
        drop(Box::from_raw(cm));
    }
}

/// Copies the matrix into 16 row-major doubles.
///
/// # Safety
/// `out` must have room for 16 doubles.
#[no_mangle]
pub unsafe extern "C" fn gc_covariance_get(cm: *const GcCovariance, out: *mut f64) -> GcStatus {
    guard(|| {
        let g = handle(cm, "cm")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = std::slice::from_raw_parts_mut(out, 16);
        for (i, row) in g.rows().iter().enumerate() {
            s[4 * i..4 * i + 4].copy_from_slice(row);
        }
        Ok(())
    })
}

/// Smallest eigenvalue of the uncertainty-principle matrix.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gc_state_condition(cm: *const GcCovariance, out: *mut f64) -> GcStatus {
    guard(|| {
        let g = handle(cm, "cm")?;
        put(out, gausschan::state::state_condition(g), "out")
    })
}

/// Evaluates every channel quantity.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gc_analyze(cm: *const GcCovariance, out: *mut GcReport) -> GcStatus {
    guard(|| {
        let g = handle(cm, "cm")?;
        let ev = evaluate(g).map_err(fail)?;
        let v = ev.values.map(|x| x.unwrap_or(f64::NAN));
        let r = GcReport {
            lambda: v.lambda,
            lambda_ta: v.lambda_ta,
            witness: v.witness,
            log_negativity: v.log_negativity,
            q_lower_bound: v.q_lower_bound,
            fidelity: v.fidelity,
            purity: v.purity,
            key_rate: v.key_rate,
            physical: ev.physical as i32,
            witness_converged: ev.witness.converged as i32,
        };
        put(out, r, "out")
    })
}

/// Adds the smallest identity multiple that makes the matrix physical.
///
/// # Safety
/// Pointers must be valid; `delta` may be null.
#[no_mangle]
pub unsafe extern "C" fn gc_covariance_repair(
    cm: *const GcCovariance,
    out: *mut *mut GcCovariance,
    delta: *mut f64,
) -> GcStatus {
    guard(|| {
        let g = handle(cm, "cm")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = repair(g);
        if !delta.is_null() {
            delta.write(r.delta);
        }
        put(out, boxed(r.repaired), "out")
    })
}

/// Checks complete positivity of the channel (X, Y). `margin` is the
/// smallest eigenvalue of the positivity condition and may be null.
///
/// # Safety
/// `x` and `y` must point to 16 doubles each.
#[no_mangle]
pub unsafe extern "C" fn gc_channel_is_cp(
    x: *const f64,
    y: *const f64,
    completely_positive: *mut i32,
    margin: *mut f64,
) -> GcStatus {
    guard(|| {
        let ch = GaussianChannel::new(read_mat(x, "x")?, read_mat(y, "y")?).map_err(fail)?;
        let cp = ch.is_completely_positive();
        if !margin.is_null() {
            margin.write(cp.margin);
        }
        put(completely_positive, cp.completely_positive as i32, "completely_positive")
    })
}

/// Applies the channel (X, Y) to a covariance matrix.
///
/// # Safety
/// `x` and `y` must point to 16 doubles each; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gc_channel_apply(
    x: *const f64,
    y: *const f64,
    cm: *const GcCovariance,
    out: *mut *mut GcCovariance,
) -> GcStatus {
    guard(|| {
        let ch = GaussianChannel::new(read_mat(x, "x")?, read_mat(y, "y")?).map_err(fail)?;
        let g = handle(cm, "cm")?;
        put(out, boxed(ch.apply(g)), "out")
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn gc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
