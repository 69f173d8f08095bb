//! C ABI for the K-group pipeline.
//!
//! The interface follows the usual opaque-handle pattern: `syntomic_compute`
//! allocates a result handle on success, accessors read scalar fields or
//! copy out the exponent lists, and `syntomic_result_free` releases the
//! handle.  Every entry point returns an error code from `syntomic_status`
//! (or is infallible), never unwinds across the boundary, and tolerates
//! NULL handles where that is meaningful.  See `include/syntomic.h` for the
//! matching declarations.

use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use syntomic::pipeline::{kgroups, KGroupInput, KGroupResult};
use syntomic::Error;

/// Status codes mirrored in the C header.
pub const SYNTOMIC_OK: i32 = 0;
pub const SYNTOMIC_ERR_INVALID_ARGUMENT: i32 = 1;
pub const SYNTOMIC_ERR_PRECISION: i32 = 2;
pub const SYNTOMIC_ERR_CHECK_FAILED: i32 = 3;
pub const SYNTOMIC_ERR_INTERNAL: i32 = 4;
pub const SYNTOMIC_ERR_PANIC: i32 = 5;

/// Opaque result handle; the C side only ever sees pointers to it.
pub struct SyntomicResult {
    inner: KGroupResult,
}

fn status_of(err: &Error) -> i32 {
    match err {
        Error::NotPrime(_)
        | Error::NotIrreducible
        | Error::NonSeparable
        | Error::BadEisenstein(_)
        | Error::EmptyRange(_, _)
        | Error::BoundTooSmall(_)
        | Error::InvalidArgument(_) => SYNTOMIC_ERR_INVALID_ARGUMENT,
        Error::PrecisionTooSmall(_) | Error::PrecisionExhausted { .. } => SYNTOMIC_ERR_PRECISION,
        Error::CheckFailed(_) | Error::H0Nonzero => SYNTOMIC_ERR_CHECK_FAILED,
        _ => SYNTOMIC_ERR_INTERNAL,
    }
}

/// Compute K_{2i-1} and K_{2i-2} of O_K/pi^n.
///
/// `eisenstein` points to the `eisenstein_len` upper coefficients
/// c_1, ..., c_e of the Eisenstein polynomial E = p + c_1 z + ... + c_e z^e;
/// pass a single 1 for the unramified case E = z + p.  `precision` of 0
/// selects the planned working precision; `adaptive` nonzero retries with
/// doubled precision on exhaustion.  On success `*out` owns a new handle.
///
/// # Safety
/// `eisenstein` must point to `eisenstein_len` readable values and `out`
/// must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn syntomic_compute(
    p: u64,
    f: usize,
    n: u32,
    i: u64,
    eisenstein: *const i64,
    eisenstein_len: usize,
    precision: u32,
    adaptive: i32,
    out: *mut *mut SyntomicResult,
) -> i32 {
    if out.is_null() || (eisenstein.is_null() && eisenstein_len > 0) {
        return SYNTOMIC_ERR_INVALID_ARGUMENT;
    }
    *out = ptr::null_mut();
    let eis: Vec<i64> = if eisenstein_len == 0 {
        vec![1]
    } else {
        std::slice::from_raw_parts(eisenstein, eisenstein_len).to_vec()
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        let input = KGroupInput {
            p,
            f,
            n,
            eisenstein: eis,
            i,
            precision_override: if precision == 0 { None } else { Some(precision) },
            adaptive: adaptive != 0,
            h_lift: None,
        };
        kgroups(&input)
    }));
    match result {
        Ok(Ok(res)) => {
            *out = Box::into_raw(Box::new(SyntomicResult { inner: res }));
            SYNTOMIC_OK
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => SYNTOMIC_ERR_PANIC,
    }
}

/// Release a handle returned by `syntomic_compute`.  NULL is a no-op.
///
/// # Safety
/// `res` must be NULL or a pointer previously returned by
/// `syntomic_compute` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_free(res: *mut SyntomicResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

unsafe fn with_result<T>(res: *const SyntomicResult, d: T, f: impl FnOnce(&KGroupResult) -> T) -> T {
    if res.is_null() {
        d
    } else {
        f(&(*res).inner)
    }
}

/// Number of cyclic summands of K_{2i-1}.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_h1_len(res: *const SyntomicResult) -> usize {
    with_result(res, 0, |r| r.h1.len())
}

/// Number of cyclic summands of K_{2i-2}.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_h2_len(res: *const SyntomicResult) -> usize {
    with_result(res, 0, |r| r.h2.len())
}

/// Exponent of the idx-th summand of K_{2i-1} (so the summand is
/// Z/p^value); 0 if idx is out of range.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_h1_exponent(
    res: *const SyntomicResult,
    idx: usize,
) -> u32 {
    with_result(res, 0, |r| r.h1.get(idx).copied().unwrap_or(0))
}

/// Exponent of the idx-th summand of K_{2i-2}; 0 if idx is out of range.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_h2_exponent(
    res: *const SyntomicResult,
    idx: usize,
) -> u32 {
    with_result(res, 0, |r| r.h2.get(idx).copied().unwrap_or(0))
}

/// Certified p-adic digits of the reported exponents.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_valid_digits(res: *const SyntomicResult) -> u32 {
    with_result(res, 0, |r| r.precision.valid)
}

/// Working precision the computation ran at.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_working_digits(res: *const SyntomicResult) -> u32 {
    with_result(res, 0, |r| r.precision.working)
}

/// The full result as a JSON object in a NUL-terminated string owned by the
/// caller; free it with `syntomic_string_free`.  NULL on NULL input or if
/// serialization fails.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn syntomic_result_json(res: *const SyntomicResult) -> *mut c_char {
    with_result(res, ptr::null_mut(), |r| {
        match serde_json::to_string(r).ok().and_then(|s| CString::new(s).ok()) {
            Some(c) => c.into_raw(),
            None => ptr::null_mut(),
        }
    })
}

/// Free a string returned by `syntomic_result_json`.  NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned by
/// `syntomic_result_json` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn syntomic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static description of a status code; never NULL.
#[no_mangle]
pub extern "C" fn syntomic_status_message(code: i32) -> *const c_char {
    let msg: &'static [u8] = match code {
        SYNTOMIC_OK => b"ok\0",
        SYNTOMIC_ERR_INVALID_ARGUMENT => b"invalid argument\0",
        SYNTOMIC_ERR_PRECISION => b"working precision exhausted\0",
        SYNTOMIC_ERR_CHECK_FAILED => b"internal cross-check failed\0",
        SYNTOMIC_ERR_INTERNAL => b"internal error\0",
        SYNTOMIC_ERR_PANIC => b"panic caught at the language boundary\0",
        _ => b"unknown status code\0",
    };
    msg.as_ptr() as *const c_char
}
