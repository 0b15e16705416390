//! C ABI over `permix`. Fallible calls return a [`PermixStatus`] and write
//! results through out-pointers; the message of the most recent failure on the
//! calling thread is available from [`permix_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use permix::bounds::{evaluate_instance, thm_main_bounds};
use permix::mixtures::{exact_chi2_bruteforce, instance_capacity, ComponentList};
use permix::permanent::{exact_chi2_permanent, permanent_ryser, SquareMatrix};
use permix::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Invalid = 4,
    Dimension = 5,
    ZeroMarginal = 6,
    Cap = 7,
    IllConditioned = 8,
    Panic = 9,
}

/// Opaque list of component distributions on a common finite alphabet.
pub struct PermixComponents {
    inner: ComponentList,
}

/// Upper bounds, spectral lower bound and (when computable) the exact value.
/// Unavailable entries are `NaN`; infinite bounds are `INFINITY`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermixBounds {
    pub exact_chi2: f64,
    pub ub1: f64,
    pub ub2: f64,
    pub ub3: f64,
    pub lower_spectral: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PermixStatus {
    match e {
        Error::Invalid(_) => PermixStatus::Invalid,
        Error::Dimension { .. } => PermixStatus::Dimension,
        Error::ZeroMarginal { .. } => PermixStatus::ZeroMarginal,
        Error::Cap(_) => PermixStatus::Cap,
        Error::IllConditioned { .. } => PermixStatus::IllConditioned,
        Error::Parse(_) => PermixStatus::Parse,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PermixStatus>) -> PermixStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PermixStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            PermixStatus::Panic
        }
    }
}

fn lib<T>(r: permix::Result<T>) -> Result<T, PermixStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> PermixStatus {
    set_error(format!("{what} is null"));
    PermixStatus::NullPointer
}

/// # Safety
/// `h` must be null or a live handle from [`permix_components_from_json`].
unsafe fn handle<'a>(h: *const PermixComponents) -> Result<&'a ComponentList, PermixStatus> {
    h.as_ref().map(|h| &h.inner).ok_or_else(|| null("handle"))
}

/// Writes through `out` if it is non-null.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, v: T) -> Result<(), PermixStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Version string of the library; static, do not free.
#[no_mangle]
pub extern "C" fn permix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or null when the last call
/// succeeded. Free with [`permix_string_free`].
#[no_mangle]
pub extern "C" fn permix_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn permix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"alphabet_size": K, "components": [[...], ...]}` into a new handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` valid for writing a
/// pointer. On success `*out` owns a handle to release with
/// [`permix_components_free`]; on failure `*out` is set to null.
#[no_mangle]
pub unsafe extern "C" fn permix_components_from_json(
    json: *const c_char,
    out: *mut *mut PermixComponents,
) -> PermixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        out.write(ptr::null_mut());
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            set_error(format!("json is not UTF-8: {e}"));
            PermixStatus::InvalidUtf8
        })?;
        let inner = lib(ComponentList::from_json(text))?;
        out.write(Box::into_raw(Box::new(PermixComponents { inner })));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`permix_components_from_json`] that was
/// not freed yet.
#[no_mangle]
pub unsafe extern "C" fn permix_components_free(h: *mut PermixComponents) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of components and alphabet size.
///
/// # Safety
/// `h` must be a live handle; `n` and `k` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn permix_components_shape(
    h: *const PermixComponents,
    n: *mut usize,
    k: *mut usize,
) -> PermixStatus {
    guard(|| {
        let c = handle(h)?;
        write(n, c.n())?;
        write(k, c.alphabet_size())
    })
}

/// Exact chi-square between the permutation mixture and the i.i.d. mixture,
/// through the permanent of the mixture matrix.
///
/// # Safety
/// `h` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn permix_chi2_exact(h: *const PermixComponents, out: *mut f64) -> PermixStatus {
    guard(|| {
        let v = lib(exact_chi2_permanent(handle(h)?))?;
        write(out, v)
    })
}

/// Same quantity by enumerating all `K^n` sequences; fails with `Cap` when too large.
///
/// # Safety
/// `h` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn permix_chi2_bruteforce(h: *const PermixComponents, out: *mut f64) -> PermixStatus {
    guard(|| {
        let v = lib(exact_chi2_bruteforce(handle(h)?))?;
        write(out, v)
    })
}

/// Chi-square mutual information of the uniform prior over the components.
///
/// # Safety
/// `h` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn permix_instance_capacity(h: *const PermixComponents, out: *mut f64) -> PermixStatus {
    guard(|| write(out, instance_capacity(handle(h)?)))
}

/// Bounds evaluated with the instance's own capacity, singularity and diameter.
///
/// # Safety
/// `h` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn permix_bounds_evaluate(h: *const PermixComponents, out: *mut PermixBounds) -> PermixStatus {
    guard(|| {
        let r = lib(evaluate_instance(handle(h)?))?;
        write(
            out,
            PermixBounds {
                exact_chi2: r.exact_chi2.unwrap_or(f64::NAN),
                ub1: r.ub1,
                ub2: r.ub2,
                ub3: r.ub3,
                lower_spectral: r.lower_spectral,
            },
        )
    })
}

/// Upper bounds from scalar functionals alone; `exact_chi2` and
/// `lower_spectral` are set to `NaN`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn permix_main_bounds(n: usize, c: f64, delta: f64, d: f64, out: *mut PermixBounds) -> PermixStatus {
    guard(|| {
        if !(c >= 0.0 && delta >= 1.0 && d >= 0.0) {
            set_error(format!("need c >= 0, delta >= 1, d >= 0 (got {c}, {delta}, {d})"));
            return Err(PermixStatus::Invalid);
        }
        let b = thm_main_bounds(n, c, delta, d);
        write(out, PermixBounds { exact_chi2: f64::NAN, ub1: b.ub1, ub2: b.ub2, ub3: b.ub3, lower_spectral: f64::NAN })
    })
}

/// Permanent of the row-major `n x n` matrix at `data`.
///
/// # Safety
/// `data` must point to `n * n` readable doubles and `out` be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn permix_permanent(data: *const f64, n: usize, out: *mut f64) -> PermixStatus {
    guard(|| {
        if data.is_null() && n > 0 {
            return Err(null("data"));
        }
        let values = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(data, n * n).to_vec() };
        let m = lib(SquareMatrix::new(n, values))?;
        let v = lib(permanent_ryser(&m))?;
        write(out, v)
    })
}
