//! C ABI for the forgetting-lab numerical library.
//!
//! Exposes the exact closed forms, the orthogonal-group moment engine
//! (behind an opaque cache handle) and the Monte Carlo forgetting
//! estimator. All functions return an [`FlStatus`] code and write results
//! through out-pointers; strings returned as `char*` must be released
//! with [`fl_string_free`].

use std::ffi::{c_char, CString};

use forgetting_lab::continual::{mc_expected_forgetting, ProblemInstance};
use forgetting_lab::moments::{MomentCache, PowerMatrix};
use forgetting_lab::rational::to_f64;
use forgetting_lab::rng::trial_rng;
use forgetting_lab::rotation::sample_haar;
use forgetting_lab::theory::{
    asymptotic_worst_case, exact_worst_case, extremal_overparam, RegimeParams,
};
use forgetting_lab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    NullPointer = 3,
    BudgetExceeded = 4,
}

fn status_of(err: &Error) -> FlStatus {
    match err {
        Error::InvalidArgument(_) | Error::InvalidDimension(_) | Error::Parse { .. } => {
            FlStatus::InvalidArgument
        }
        Error::BudgetExceeded { .. } => FlStatus::BudgetExceeded,
        _ => FlStatus::NumericalFailure,
    }
}

/// Opaque memoization context for the moment engine. Not thread-safe:
/// use one handle per thread.
pub struct FlMomentCache {
    inner: MomentCache,
}

/// Static version string; do not free.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by one of the `*_str`
/// functions below (or null), and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Leading-order worst-case expected forgetting at `(alpha, beta)`.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn fl_asymptotic_worst_case(
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> FlStatus {
    if out.is_null() {
        return FlStatus::NullPointer;
    }
    match asymptotic_worst_case(alpha, beta) {
        Ok(v) => {
            *out = v;
            FlStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Highly overparameterized limit `alpha^2 (1 - alpha)^2`.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn fl_extremal_overparam(alpha: f64, out: *mut f64) -> FlStatus {
    if out.is_null() {
        return FlStatus::NullPointer;
    }
    match extremal_overparam(alpha) {
        Ok(v) => {
            *out = v;
            FlStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

fn regime(p: u64, d: u64, m: u64) -> Result<RegimeParams, Error> {
    RegimeParams::new(p, d, m)
}

/// Exact worst-case expected forgetting as a double.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn fl_exact_worst_case(p: u64, d: u64, m: u64, out: *mut f64) -> FlStatus {
    if out.is_null() {
        return FlStatus::NullPointer;
    }
    match regime(p, d, m) {
        Ok(params) => {
            *out = to_f64(&exact_worst_case(&params));
            FlStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exact worst-case expected forgetting as a reduced fraction
/// `"num/den"`; null on invalid parameters. Free with [`fl_string_free`].
#[no_mangle]
pub extern "C" fn fl_exact_worst_case_str(p: u64, d: u64, m: u64) -> *mut c_char {
    match regime(p, d, m) {
        Ok(params) => {
            let value = exact_worst_case(&params);
            CString::new(value.to_string())
                .map_or(std::ptr::null_mut(), CString::into_raw)
        }
        Err(_) => std::ptr::null_mut(),
    }
}

/// Fresh moment-engine cache.
#[no_mangle]
pub extern "C" fn fl_moment_cache_new() -> *mut FlMomentCache {
    Box::into_raw(Box::new(FlMomentCache {
        inner: MomentCache::new(),
    }))
}

/// Release a cache created by [`fl_moment_cache_new`].
///
/// # Safety
/// `cache` must come from [`fl_moment_cache_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn fl_moment_cache_free(cache: *mut FlMomentCache) {
    if !cache.is_null() {
        drop(Box::from_raw(cache));
    }
}

unsafe fn power_matrix_from_raw(
    entries: *const u32,
    rows: usize,
    cols: usize,
) -> Result<PowerMatrix, FlStatus> {
    if entries.is_null() {
        return Err(FlStatus::NullPointer);
    }
    if rows == 0 || cols == 0 {
        return Err(FlStatus::InvalidArgument);
    }
    let flat = std::slice::from_raw_parts(entries, rows * cols);
    let matrix: Vec<Vec<u32>> = flat.chunks(cols).map(|c| c.to_vec()).collect();
    PowerMatrix::new(matrix).map_err(|e| status_of(&e))
}

/// Exact expectation of the monomial described by a row-major `rows x cols`
/// exponent matrix, as a double.
///
/// # Safety
/// `cache` must be a live handle from [`fl_moment_cache_new`], `entries`
/// must point to `rows * cols` readable `uint32_t`, and `out` to a
/// writable `double`.
#[no_mangle]
pub unsafe extern "C" fn fl_monomial_expectation(
    cache: *mut FlMomentCache,
    entries: *const u32,
    rows: usize,
    cols: usize,
    p: u64,
    out: *mut f64,
) -> FlStatus {
    if cache.is_null() || out.is_null() {
        return FlStatus::NullPointer;
    }
    let matrix = match power_matrix_from_raw(entries, rows, cols) {
        Ok(m) => m,
        Err(status) => return status,
    };
    match (*cache).inner.expectation(&matrix, p) {
        Ok(v) => {
            *out = to_f64(&v);
            FlStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exact expectation as a reduced fraction `"num/den"`; null on error.
/// Free with [`fl_string_free`].
///
/// # Safety
/// As [`fl_monomial_expectation`].
#[no_mangle]
pub unsafe extern "C" fn fl_monomial_expectation_str(
    cache: *mut FlMomentCache,
    entries: *const u32,
    rows: usize,
    cols: usize,
    p: u64,
) -> *mut c_char {
    if cache.is_null() {
        return std::ptr::null_mut();
    }
    let Ok(matrix) = power_matrix_from_raw(entries, rows, cols) else {
        return std::ptr::null_mut();
    };
    match (*cache).inner.expectation(&matrix, p) {
        Ok(v) => CString::new(v.to_string()).map_or(std::ptr::null_mut(), CString::into_raw),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Monte Carlo estimate of the (normalized) expected forgetting on a
/// bound-saturating instance with `n = d` and a random unit teacher.
///
/// # Safety
/// `out_mean` and `out_stderr` must point to writable `double`s.
#[no_mangle]
pub unsafe extern "C" fn fl_mc_worst_case_forgetting(
    p: u64,
    d: u64,
    m: u64,
    trials: u64,
    seed: u64,
    normalize: bool,
    out_mean: *mut f64,
    out_stderr: *mut f64,
) -> FlStatus {
    if out_mean.is_null() || out_stderr.is_null() {
        return FlStatus::NullPointer;
    }
    if d == 0 || d > p || m > p {
        return FlStatus::InvalidArgument;
    }
    let mut rng = trial_rng(seed, u64::MAX);
    let inst = match ProblemInstance::worst_case(p as usize, d as usize, m as usize, 1.0, &mut rng)
    {
        Ok(inst) => inst,
        Err(e) => return status_of(&e),
    };
    match mc_expected_forgetting(&inst, trials, seed, normalize) {
        Ok(est) => {
            *out_mean = est.mean;
            *out_stderr = est.stderr;
            FlStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Haar-distributed orthogonal matrix, written row-major into `out`
/// (`dim * dim` doubles). Deterministic in `seed`.
///
/// # Safety
/// `out` must point to `dim * dim` writable `double`s.
#[no_mangle]
pub unsafe extern "C" fn fl_haar_sample(dim: usize, seed: u64, out: *mut f64) -> FlStatus {
    if out.is_null() {
        return FlStatus::NullPointer;
    }
    let mut rng = trial_rng(seed, 0);
    match sample_haar(dim, &mut rng) {
        Ok(q) => {
            let matrix = q.matrix();
            let slice = std::slice::from_raw_parts_mut(out, dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    slice[i * dim + j] = matrix[(i, j)];
                }
            }
            FlStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_nul_terminated() {
        let v = fl_version();
        let s = unsafe { std::ffi::CStr::from_ptr(v) }.to_str().unwrap();
        assert_eq!(s, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn exact_and_asymptotic_values() {
        let mut out = 0.0f64;
        unsafe {
            assert_eq!(fl_asymptotic_worst_case(0.5, 1.0, &mut out), FlStatus::Ok);
            assert_eq!(out, 0.0625);
            assert_eq!(fl_exact_worst_case(100, 99, 100, &mut out), FlStatus::Ok);
            assert!((out - 4039.0 / 2040.0).abs() < 1e-15);
            assert_eq!(
                fl_exact_worst_case(3, 1, 2, &mut out),
                FlStatus::InvalidArgument
            );
            assert_eq!(
                fl_asymptotic_worst_case(0.5, 1.0, std::ptr::null_mut()),
                FlStatus::NullPointer
            );
        }
    }

    #[test]
    fn exact_string_round_trip() {
        let s = fl_exact_worst_case_str(100, 99, 100);
        assert!(!s.is_null());
        let text = unsafe { std::ffi::CStr::from_ptr(s) }.to_str().unwrap().to_owned();
        unsafe { fl_string_free(s) };
        assert_eq!(text, "4039/2040");
        assert!(fl_exact_worst_case_str(2, 1, 1).is_null());
    }

    #[test]
    fn moment_cache_usage() {
        let cache = fl_moment_cache_new();
        let entries = [4u32, 4u32];
        let mut out = 0.0f64;
        unsafe {
            assert_eq!(
                fl_monomial_expectation(cache, entries.as_ptr(), 1, 2, 4, &mut out),
                FlStatus::Ok
            );
            assert!((out - 9.0 / 1920.0).abs() < 1e-15);
            let s = fl_monomial_expectation_str(cache, entries.as_ptr(), 1, 2, 4);
            let text = std::ffi::CStr::from_ptr(s).to_str().unwrap().to_owned();
            fl_string_free(s);
            assert_eq!(text, "3/640");
            // budget refusal surfaces as a status
            let big = [10u32, 8u32];
            assert_eq!(
                fl_monomial_expectation(cache, big.as_ptr(), 1, 2, 20, &mut out),
                FlStatus::BudgetExceeded
            );
            fl_moment_cache_free(cache);
        }
    }

    #[test]
    fn mc_forgetting_smoke() {
        let (mut mean, mut se) = (0.0f64, 0.0f64);
        let status = unsafe {
            fl_mc_worst_case_forgetting(12, 5, 6, 200, 7, true, &mut mean, &mut se)
        };
        assert_eq!(status, FlStatus::Ok);
        assert!(mean > 0.0 && se > 0.0);
    }

    #[test]
    fn haar_sample_is_orthogonal() {
        let dim = 5usize;
        let mut buf = vec![0.0f64; dim * dim];
        let status = unsafe { fl_haar_sample(dim, 3, buf.as_mut_ptr()) };
        assert_eq!(status, FlStatus::Ok);
        for i in 0..dim {
            for j in 0..dim {
                let dot: f64 = (0..dim).map(|k| buf[i * dim + k] * buf[j * dim + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
        assert_eq!(
            unsafe { fl_haar_sample(0, 3, buf.as_mut_ptr()) },
            FlStatus::InvalidArgument
        );
    }
}
