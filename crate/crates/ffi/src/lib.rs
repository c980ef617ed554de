//! C ABI over `lgdim`.
//!
//! Schemes and families cross the boundary as opaque handles created by
//! `*_from_json` and released by the matching `*_free`. Every function
//! returns an [`LgdStatus`]; on failure a description is available from
//! [`lgd_last_error_message`] on the calling thread. Strings returned by the
//! library are released with [`lgd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lgdim::scheme::{compose_word, LgScheme, SchemeFamily};
use lgdim::variational::{
    dim_of_rational_frequency, lg_objective, maximize_dimension, mcmullen_oracle, CellWeights, DimensionReport,
    FrequencyVector, OptimizerOptions,
};
use lgdim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Domain = 5,
    CapExceeded = 6,
    Internal = 7,
}

/// Opaque validated scheme.
pub struct LgdScheme(LgScheme);

/// Opaque validated family of schemes.
pub struct LgdFamily(SchemeFamily);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgdOptions {
    pub restarts: u32,
    pub max_iters: u32,
    pub seed: u64,
    pub tol_obj: f64,
    pub tol_grad: f64,
    pub alphabet_cap: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgdDimension {
    pub value: f64,
    pub converged: bool,
    pub iterations: u32,
    pub gradient_norm: f64,
}

impl From<&OptimizerOptions> for LgdOptions {
    fn from(o: &OptimizerOptions) -> Self {
        LgdOptions {
            restarts: o.restarts as u32,
            max_iters: o.max_iters as u32,
            seed: o.seed,
            tol_obj: o.tol_obj,
            tol_grad: o.tol_grad,
            alphabet_cap: o.alphabet_cap,
        }
    }
}

impl From<&LgdOptions> for OptimizerOptions {
    fn from(o: &LgdOptions) -> Self {
        OptimizerOptions {
            restarts: o.restarts as usize,
            max_iters: o.max_iters as usize,
            seed: o.seed,
            tol_obj: o.tol_obj,
            tol_grad: o.tol_grad,
            alphabet_cap: o.alphabet_cap,
        }
    }
}

impl From<&DimensionReport> for LgdDimension {
    fn from(r: &DimensionReport) -> Self {
        LgdDimension {
            value: r.value,
            converged: r.converged,
            iterations: r.iterations.min(u32::MAX as usize) as u32,
            gradient_norm: r.gradient_norm,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(LgdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Json { .. } => LgdStatus::Parse,
            Error::Validation(_) => LgdStatus::Validation,
            Error::CapExceeded { .. } => LgdStatus::CapExceeded,
            Error::Io { .. } => LgdStatus::Internal,
            _ => LgdStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LgdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            LgdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LgdStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LgdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(LgdStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on the same
/// thread.
#[no_mangle]
pub extern "C" fn lgd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses and validates a scheme from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_from_json(json: *const c_char, out: *mut *mut LgdScheme) -> LgdStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let scheme = LgScheme::from_json(text)?;
        write(out, Box::into_raw(Box::new(LgdScheme(scheme))))
    })
}

/// # Safety
/// `scheme` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_free(scheme: *mut LgdScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// # Safety
/// `scheme` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_alphabet_size(scheme: *const LgdScheme, out: *mut usize) -> LgdStatus {
    guard(|| write(out, deref(scheme, "scheme")?.0.alphabet_size()))
}

/// # Safety
/// `scheme` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_is_strictly_separated(scheme: *const LgdScheme, out: *mut bool) -> LgdStatus {
    guard(|| write(out, deref(scheme, "scheme")?.0.strictly_separated()))
}

/// Serializes a scheme to JSON. Release the string with
/// [`lgd_string_free`].
///
/// # Safety
/// `scheme` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_to_json(scheme: *const LgdScheme, out: *mut *mut c_char) -> LgdStatus {
    guard(|| {
        let json = deref(scheme, "scheme")?.0.to_json();
        let c = CString::new(json).map_err(|e| Failure(LgdStatus::Internal, e.to_string()))?;
        write(out, c.into_raw())
    })
}

/// # Safety
/// `s` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lgd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn lgd_options_default() -> LgdOptions {
    LgdOptions::from(&OptimizerOptions::default())
}

/// Maximizes the dimension functional of a scheme. `options` may be null
/// for defaults.
///
/// # Safety
/// `scheme` must be a live handle, `options` null or readable, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_dimension(
    scheme: *const LgdScheme,
    options: *const LgdOptions,
    out: *mut LgdDimension,
) -> LgdStatus {
    guard(|| {
        let scheme = deref(scheme, "scheme")?;
        let opts = options.as_ref().map(OptimizerOptions::from).unwrap_or_default();
        let report = maximize_dimension(&scheme.0, &opts);
        write(out, LgdDimension::from(&report))
    })
}

/// Evaluates the dimension functional at a weight vector in row-major cell
/// order.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_scheme_objective(
    scheme: *const LgdScheme,
    weights: *const f64,
    len: usize,
    out: *mut f64,
) -> LgdStatus {
    guard(|| {
        let scheme = &deref(scheme, "scheme")?.0;
        let w = CellWeights::for_scheme(scheme, read_slice(weights, len, "weights")?.to_vec())?;
        write(out, lg_objective(scheme, &w)?)
    })
}

/// Parses and validates a family from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_family_from_json(json: *const c_char, out: *mut *mut LgdFamily) -> LgdStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let family = SchemeFamily::from_json(text)?;
        write(out, Box::into_raw(Box::new(LgdFamily(family))))
    })
}

/// # Safety
/// `family` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lgd_family_free(family: *mut LgdFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// # Safety
/// `family` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_family_len(family: *const LgdFamily, out: *mut usize) -> LgdStatus {
    guard(|| write(out, deref(family, "family")?.0.len()))
}

/// Composes the schemes named by a word of 1-based symbols. The result is a
/// new scheme handle.
///
/// # Safety
/// `word` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_family_compose_word(
    family: *const LgdFamily,
    word: *const usize,
    len: usize,
    alphabet_cap: usize,
    out: *mut *mut LgdScheme,
) -> LgdStatus {
    guard(|| {
        let family = deref(family, "family")?;
        let scheme = compose_word(&family.0, read_slice(word, len, "word")?, alphabet_cap)?;
        write(out, Box::into_raw(Box::new(LgdScheme(scheme))))
    })
}

/// Dimension for the rational frequency vector `numerators / sum`.
///
/// # Safety
/// `numerators` must point to `len` readable values, `options` null or
/// readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_family_dim_rational(
    family: *const LgdFamily,
    numerators: *const u64,
    len: usize,
    options: *const LgdOptions,
    out: *mut LgdDimension,
) -> LgdStatus {
    guard(|| {
        let family = deref(family, "family")?;
        let nums = read_slice(numerators, len, "numerators")?.to_vec();
        let total = nums.iter().sum();
        let q = FrequencyVector::from_rational(nums, total)?;
        let opts = options.as_ref().map(OptimizerOptions::from).unwrap_or_default();
        let report = dim_of_rational_frequency(&family.0, &q, &opts)?;
        write(out, LgdDimension::from(&report))
    })
}

/// Closed-form dimension of an `n` by `m` uniform-grid carpet with the given
/// chosen-cell counts per nonempty row.
///
/// # Safety
/// `row_counts` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgd_mcmullen_oracle(
    n: usize,
    m: usize,
    row_counts: *const usize,
    len: usize,
    out: *mut f64,
) -> LgdStatus {
    guard(|| write(out, mcmullen_oracle(n, m, read_slice(row_counts, len, "row_counts")?)?))
}
