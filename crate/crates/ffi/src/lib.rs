//! C interface to `polar_ldgm`.
//!
//! Kernels and generators are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns a [`PlStatus`]; on failure a description is available from
//! [`pl_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_bigint::BigUint;
use polar_ldgm::construction::{self, SparseGenerator};
use polar_ldgm::exact::format_ratio;
use polar_ldgm::gf2::{BitMatrix, BitVec};
use polar_ldgm::kernels::{self, Kernel};
use polar_ldgm::weightstats;
use polar_ldgm::Error;

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Singular = 3,
    NotPolarizing = 4,
    Domain = 5,
    Unsupported = 6,
    Refused = 7,
    Parse = 8,
    Infeasible = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Opaque polarizing kernel.
pub struct PlKernel(Kernel);

/// Opaque column-sparse generator matrix.
pub struct PlGenerator(SparseGenerator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> PlStatus {
    match err {
        Error::Dimension(_) => PlStatus::Dimension,
        Error::Singular => PlStatus::Singular,
        Error::NotPolarizing(_) => PlStatus::NotPolarizing,
        Error::Domain(_) => PlStatus::Domain,
        Error::Unsupported(_) => PlStatus::Unsupported,
        Error::Refused(_) => PlStatus::Refused,
        Error::Parse(_) => PlStatus::Parse,
        Error::Infeasible(_) => PlStatus::Infeasible,
    }
}

fn fail(status: PlStatus, msg: impl Into<String>) -> PlStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), PlStatus>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PlStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: polar_ldgm::Result<T>) -> Result<T, PlStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PlStatus> {
    if p.is_null() {
        Err(fail(PlStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn write_slice<T: Copy>(src: &[T], out: *mut T, cap: usize) -> Result<(), PlStatus> {
    if src.len() > cap {
        return Err(fail(
            PlStatus::BufferTooSmall,
            format!("need room for {} values, got {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        non_null(out, "output buffer")?;
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Looks up a catalogue kernel such as `"G2"` or `"G3*"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_kernel_by_name(name: *const c_char, out: *mut *mut PlKernel) -> PlStatus {
    guard(|| {
        non_null(name, "name")?;
        non_null(out, "out")?;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(PlStatus::Parse, "name is not UTF-8"))?;
        let k = check(kernels::by_name(name))?;
        *out = Box::into_raw(Box::new(PlKernel(k)));
        Ok(())
    })
}

/// Builds a kernel from `l * l` row-major bytes, each 0 or 1.
///
/// # Safety
/// `bits` must point to `l * l` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_kernel_from_bits(bits: *const u8, l: usize, out: *mut *mut PlKernel) -> PlStatus {
    guard(|| {
        non_null(bits, "bits")?;
        non_null(out, "out")?;
        let cells = l
            .checked_mul(l)
            .ok_or_else(|| fail(PlStatus::Dimension, "side length overflows"))?;
        let raw = std::slice::from_raw_parts(bits, cells);
        if raw.iter().any(|&b| b > 1) {
            return Err(fail(PlStatus::Parse, "entries must be 0 or 1"));
        }
        let rows = raw.chunks(l.max(1)).map(BitVec::from_bits).collect();
        let m = check(BitMatrix::from_rows(rows))?;
        let k = check(Kernel::new("custom", m))?;
        *out = Box::into_raw(Box::new(PlKernel(k)));
        Ok(())
    })
}

/// # Safety
/// `k` must be null or a kernel from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_kernel_free(k: *mut PlKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Side length `l`, or 0 for a null handle.
///
/// # Safety
/// `k` must be null or a live kernel handle.
#[no_mangle]
pub unsafe extern "C" fn pl_kernel_size(k: *const PlKernel) -> usize {
    k.as_ref().map_or(0, |k| k.0.size())
}

/// Rate of polarization, or NaN for a null handle.
///
/// # Safety
/// `k` must be null or a live kernel handle.
#[no_mangle]
pub unsafe extern "C" fn pl_kernel_exponent(k: *const PlKernel) -> f64 {
    k.as_ref().map_or(f64::NAN, |k| k.0.exponent())
}

/// Copies the `l` partial distances into `out`.
///
/// # Safety
/// `k` must be a live kernel handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn pl_kernel_partial_distances(k: *const PlKernel, out: *mut usize, cap: usize) -> PlStatus {
    guard(|| {
        non_null(k, "kernel")?;
        write_slice((*k).0.partial_distances(), out, cap)
    })
}

/// Erasure probabilities of the `l^n` bit channels over BEC(`z`).
///
/// # Safety
/// `k` must be a live kernel handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn pl_bec_reliabilities(
    k: *const PlKernel,
    n: u32,
    z: f64,
    out: *mut f64,
    cap: usize,
) -> PlStatus {
    guard(|| {
        non_null(k, "kernel")?;
        let rel = check(construction::bec_reliabilities(&(*k).0, n, z))?;
        write_slice(&rel, out, cap)
    })
}

/// Generator made of the rows of `K^{(x)n}` listed in `info_set`.
///
/// # Safety
/// `k` must be a live kernel handle, `info_set` must hold `len` indices and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_build(
    k: *const PlKernel,
    n: u32,
    info_set: *const usize,
    len: usize,
    out: *mut *mut PlGenerator,
) -> PlStatus {
    guard(|| {
        non_null(k, "kernel")?;
        non_null(out, "out")?;
        let info = if len == 0 {
            &[][..]
        } else {
            non_null(info_set, "info_set")?;
            std::slice::from_raw_parts(info_set, len)
        };
        let g = check(construction::build_generator(&(*k).0, n, info))?;
        *out = Box::into_raw(Box::new(PlGenerator(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a generator from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_free(g: *mut PlGenerator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be null or a live generator handle.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_rows(g: *const PlGenerator) -> usize {
    g.as_ref().map_or(0, |g| g.0.rows)
}

/// # Safety
/// `g` must be null or a live generator handle.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_cols(g: *const PlGenerator) -> usize {
    g.as_ref().map_or(0, |g| g.0.cols())
}

/// # Safety
/// `g` must be null or a live generator handle.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_max_column_weight(g: *const PlGenerator) -> usize {
    g.as_ref().map_or(0, |g| g.0.max_column_weight())
}

/// Copies the column weights into `out`.
///
/// # Safety
/// `g` must be a live generator handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_column_weights(g: *const PlGenerator, out: *mut usize, cap: usize) -> PlStatus {
    guard(|| {
        non_null(g, "generator")?;
        write_slice(&(*g).0.column_weights(), out, cap)
    })
}

/// Splits every column heavier than `w_ub`. Writes the new generator to
/// `out` and the added-column ratio as a `"p/q"` string to `ratio`, which
/// may be null. The string is released with [`pl_string_free`].
///
/// # Safety
/// `g` must be a live generator handle, `out` writable and `ratio` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pl_generator_split(
    g: *const PlGenerator,
    w_ub: usize,
    out: *mut *mut PlGenerator,
    ratio: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        non_null(g, "generator")?;
        non_null(out, "out")?;
        let (split, report) = check(construction::split(&(*g).0, w_ub))?;
        if !ratio.is_null() {
            *ratio = into_c_string(format_ratio(&report.r));
        }
        *out = Box::into_raw(Box::new(PlGenerator(split)));
        Ok(())
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Exact fraction of columns added when `G2^{(x)n}` is split at `w_ub`, as
/// a `"p/q"` string, or null on failure. Release with [`pl_string_free`].
#[no_mangle]
pub extern "C" fn pl_exact_rate_loss(n: u32, w_ub: u64) -> *mut c_char {
    let mut result = ptr::null_mut();
    let status = guard(|| {
        let r = check(weightstats::exact_r(n, &BigUint::from(w_ub)))?;
        result = into_c_string(format_ratio(&r));
        Ok(())
    });
    if status == PlStatus::Ok {
        result
    } else {
        ptr::null_mut()
    }
}

/// Threshold on the sparsity exponent separating vanishing from diverging
/// rate loss.
#[no_mangle]
pub extern "C" fn pl_epsilon_star() -> f64 {
    weightstats::epsilon_star_closed_form()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
