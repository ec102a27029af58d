//! C ABI over the `wishart` crate.
//!
//! Matrices cross the boundary as row-major `double` arrays of length `p*p`.
//! Every fallible call returns a [`WishartStatus`]; on failure a message is
//! stored per thread and can be read with [`wishart_last_error`]. Objects are
//! opaque handles released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use wishart::distribution::wishart_laplace;
use wishart::finance::cir_bond_closed_form;
use wishart::matrix::{GeneralMatrix, PsdMatrix, SymMatrix};
use wishart::samplers::WishartLawParams;
use wishart::sde::{simulate_wishart_adaptive, CirParams, PathRecord, WishartParams};
use wishart::{RngStream, WishartError};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WishartStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotSymmetric = 4,
    NotPsd = 5,
    Singular = 6,
    UnstableDrift = 7,
    StepUnderflow = 8,
    NonFinite = 9,
    OutOfRange = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&WishartError> for WishartStatus {
    fn from(e: &WishartError) -> Self {
        match e {
            WishartError::NotPsd { .. } => WishartStatus::NotPsd,
            WishartError::NotSymmetric { .. } => WishartStatus::NotSymmetric,
            WishartError::SingularOperator { .. } | WishartError::SingularSigma { .. } => WishartStatus::Singular,
            WishartError::UnstableDrift { .. } => WishartStatus::UnstableDrift,
            WishartError::StepUnderflow { .. } => WishartStatus::StepUnderflow,
            WishartError::NonFiniteSample(_) | WishartError::EmptySample => WishartStatus::NonFinite,
            WishartError::IndexOutOfRange { .. } => WishartStatus::OutOfRange,
            WishartError::DimensionMismatch(_) => WishartStatus::DimensionMismatch,
            WishartError::NonPositiveStep(_)
            | WishartError::BadDof { .. }
            | WishartError::DegenerateDiffusion
            | WishartError::InvalidParameter(_) => WishartStatus::InvalidArgument,
        }
    }
}

/// Wishart SDE parameters `(Q, K, α, S₀)`.
pub struct WishartModel(WishartParams);

/// A simulated trajectory.
pub struct WishartPath(PathRecord);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(WishartStatus, String);

impl From<WishartError> for Failure {
    fn from(e: WishartError) -> Self {
        Failure(WishartStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WishartStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WishartStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            WishartStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(WishartStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_general(data: *const f64, p: usize, what: &str) -> Result<GeneralMatrix, Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    let v = slice::from_raw_parts(data, p * p);
    Ok(GeneralMatrix::from_row_slice(p, p, v))
}

unsafe fn read_psd(data: *const f64, p: usize, what: &str) -> Result<PsdMatrix, Failure> {
    let m = read_general(data, p, what)?;
    Ok(PsdMatrix::new(SymMatrix::try_from_matrix(m)?)?)
}

fn check_dim(p: usize) -> Result<(), Failure> {
    if p == 0 {
        return Err(Failure(WishartStatus::InvalidArgument, "dimension must be positive".to_string()));
    }
    Ok(())
}

/// Copies the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length
/// excluding the terminator, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wishart_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Builds a model from `p×p` row-major `q`, `k`, `s0` and `alpha`.
///
/// # Safety
/// Matrix pointers must reference `p*p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wishart_model_new(
    p: usize,
    q: *const f64,
    k: *const f64,
    alpha: f64,
    s0: *const f64,
    out: *mut *mut WishartModel,
) -> WishartStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        check_dim(p)?;
        let params = WishartParams::new(read_general(q, p, "q")?, read_general(k, p, "k")?, alpha, read_psd(s0, p, "s0")?)?;
        *out = Box::into_raw(Box::new(WishartModel(params)));
        Ok(())
    })
}

/// Model equivalent to the CIR short rate `dr = a(b - r)dt + σ√r dW`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wishart_model_from_cir(
    a: f64,
    b: f64,
    sigma: f64,
    r0: f64,
    out: *mut *mut WishartModel,
) -> WishartStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = CirParams::new(a, b, sigma, r0)?.to_wishart()?;
        *out = Box::into_raw(Box::new(WishartModel(params)));
        Ok(())
    })
}

/// Dimension `p` of the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wishart_model_dim(model: *const WishartModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// # Safety
/// `model` must be null or a handle from `wishart_model_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wishart_model_free(model: *mut WishartModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Adaptive Euler path on `[0, horizon]` with initial step `h0`. The same
/// `(seed, stream)` pair reproduces the same path.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wishart_simulate(
    model: *const WishartModel,
    horizon: f64,
    h0: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut WishartPath,
) -> WishartStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = RngStream::new(seed, stream);
        let path = simulate_wishart_adaptive(&model.0, horizon, h0, &mut rng)?;
        *out = Box::into_raw(Box::new(WishartPath(path)));
        Ok(())
    })
}

/// Number of recorded states, or 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wishart_path_len(path: *const WishartPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.len())
}

/// Matrix dimension of the states, or 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wishart_path_dim(path: *const WishartPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.dim())
}

/// Writes the time mesh into `times`, which must hold `wishart_path_len`
/// values.
///
/// # Safety
/// `path` must be a live handle; `times` must point to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn wishart_path_times(path: *const WishartPath, times: *mut f64, cap: usize) -> WishartStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        if times.is_null() {
            return Err(null("times"));
        }
        let src = &path.0.times;
        if cap < src.len() {
            return Err(Failure(
                WishartStatus::BufferTooSmall,
                format!("need {} doubles, got {cap}", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), times, src.len());
        Ok(())
    })
}

/// Writes state `index` row-major into `state` (`p*p` doubles).
///
/// # Safety
/// `path` must be a live handle; `state` must point to `p*p` doubles.
#[no_mangle]
pub unsafe extern "C" fn wishart_path_state(path: *const WishartPath, index: usize, state: *mut f64) -> WishartStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        if state.is_null() {
            return Err(null("state"));
        }
        let s = path.0.states.get(index).ok_or(WishartError::IndexOutOfRange {
            index,
            bound: path.0.len(),
        })?;
        let p = s.dim();
        let dst = slice::from_raw_parts_mut(state, p * p);
        for i in 0..p {
            for j in 0..p {
                dst[i * p + j] = s.get(i, j);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `path` must be null or a handle from `wishart_simulate`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wishart_path_free(path: *mut WishartPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// `E[etr(-U S)]` for `S ~ W_p(n, Σ, Θ)`.
///
/// # Safety
/// `sigma`, `theta`, `u` must reference `p*p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wishart_laplace_transform(
    p: usize,
    n: f64,
    sigma: *const f64,
    theta: *const f64,
    u: *const f64,
    out: *mut f64,
) -> WishartStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        check_dim(p)?;
        let law = WishartLawParams::new(n, read_psd(sigma, p, "sigma")?, read_general(theta, p, "theta")?)?;
        *out = wishart_laplace(&read_psd(u, p, "u")?, &law);
        Ok(())
    })
}

/// Closed-form zero-coupon bond price under CIR for short rate `r` and
/// time to maturity `h`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wishart_cir_bond_price(
    a: f64,
    b: f64,
    sigma: f64,
    r: f64,
    h: f64,
    out: *mut f64,
) -> WishartStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(h >= 0.0 && h.is_finite() && r.is_finite()) {
            return Err(Failure(WishartStatus::InvalidArgument, format!("need finite r and h >= 0, got r = {r}, h = {h}")));
        }
        let cir = CirParams::new(a, b, sigma, r.max(0.0))?;
        *out = cir_bond_closed_form(&cir, r, h);
        Ok(())
    })
}
