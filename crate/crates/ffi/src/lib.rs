//! C ABI over `qdiscord`.
//!
//! States live behind an opaque `QdState` handle created by `qd_state_new` or
//! `qd_state_from_json` and released with `qd_state_free`. Every fallible call returns a
//! `QdStatus`; on failure `qd_last_error` describes the most recent error on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdiscord::discord::{discord_numerical, discord_upper_bound_with_cutoff, NumericalOptions};
use qdiscord::io::{bipartition_last, parse_state};
use qdiscord::lin_corr::classical_corr_linear_with_cutoff;
use qdiscord::qmat::{CMatrix, C64};
use qdiscord::tol::RANGE_CUTOFF_REL;
use qdiscord::{DensityMatrix, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    NotHermitian = 3,
    NotPsd = 4,
    InvalidTrace = 5,
    RankDeficient = 6,
    InvalidParameter = 7,
    Invariant = 8,
    Parse = 9,
    Internal = 10,
}

impl From<&Error> for QdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch(_) | Error::InvalidSubsystem { .. } => QdStatus::DimensionMismatch,
            Error::NotHermitian(_) => QdStatus::NotHermitian,
            Error::NotPsd(_) => QdStatus::NotPsd,
            Error::InvalidTrace(_) => QdStatus::InvalidTrace,
            Error::RankDeficient(_) | Error::RankTooHigh(_) => QdStatus::RankDeficient,
            Error::InvalidParameter(_) | Error::InconsistentDecomposition(_) => QdStatus::InvalidParameter,
            Error::Invariant(_) => QdStatus::Invariant,
            Error::Json(_) | Error::Csv(_) | Error::Io(_) => QdStatus::Parse,
        }
    }
}

/// Opaque bipartite density matrix.
pub struct QdState(DensityMatrix);

/// Linear-entropy classical correlation and the axis of its projective measurement.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QdCorrelation {
    pub i2: f64,
    pub lambda_max: f64,
    pub axis: [f64; 3],
}

/// Discord bound; `q_numerical` and `delta` are NaN unless the numerical optimizer ran.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QdDiscord {
    pub mutual_info: f64,
    pub i2: f64,
    pub q_upper_bound: f64,
    pub q_numerical: f64,
    pub delta: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), (QdStatus, String)>>(f: F) -> QdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QdStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (QdStatus, String) {
    (QdStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (QdStatus, String) {
    (QdStatus::NullPointer, format!("{what} is null"))
}

fn cutoff_or_default(cutoff: f64) -> f64 {
    if cutoff > 0.0 {
        cutoff
    } else {
        RANGE_CUTOFF_REL
    }
}

/// Builds a state of dimensions `d_a x d_b` from row-major real and imaginary parts,
/// each of length `(d_a d_b)^2`.
///
/// # Safety
/// `re` and `im` must point to `(d_a * d_b)^2` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_state_new(
    d_a: usize,
    d_b: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut QdState,
) -> QdStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("matrix data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let d = d_a
            .checked_mul(d_b)
            .filter(|&d| d > 0 && d <= 1024)
            .ok_or_else(|| lib_err(Error::DimensionMismatch(format!("dims [{d_a}, {d_b}]"))))?;
        let re = std::slice::from_raw_parts(re, d * d);
        let im = std::slice::from_raw_parts(im, d * d);
        let m = CMatrix::from_fn(d, d, |i, j| C64::new(re[i * d + j], im[i * d + j]));
        let rho = DensityMatrix::new(m, vec![d_a, d_b]).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(QdState(rho)));
        Ok(())
    })
}

/// Parses a state spec or a density matrix from NUL-terminated JSON. States with more than
/// two subsystems are split as (all but the last, last).
///
/// # Safety
/// `json` must be a valid C string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_state_from_json(json: *const c_char, out: *mut *mut QdState) -> QdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| (QdStatus::Parse, "json is not UTF-8".to_owned()))?;
        let rho = parse_state(text).and_then(bipartition_last).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(QdState(rho)));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qd_state_free(state: *mut QdState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Total Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_state_dim(state: *const QdState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// `cutoff <= 0` selects the default relative eigenvalue cutoff.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qd_classical_correlation(
    state: *const QdState,
    cutoff: f64,
    out: *mut QdCorrelation,
) -> QdStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let res = classical_corr_linear_with_cutoff(&state.0, cutoff_or_default(cutoff)).map_err(lib_err)?;
        let axis = res
            .measurement
            .axis()
            .ok_or_else(|| lib_err(Error::Invariant("constructed measurement is not projective".into())))?;
        *out = QdCorrelation {
            i2: res.i2,
            lambda_max: res.lambda_max,
            axis,
        };
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qd_discord_bound(state: *const QdState, cutoff: f64, out: *mut QdDiscord) -> QdStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rep = discord_upper_bound_with_cutoff(&state.0, cutoff_or_default(cutoff)).map_err(lib_err)?;
        *out = QdDiscord {
            mutual_info: rep.mutual_info,
            i2: rep.i2,
            q_upper_bound: rep.q_upper_bound,
            q_numerical: f64::NAN,
            delta: f64::NAN,
        };
        Ok(())
    })
}

/// Bound plus numerical minimization on an `n_theta x n_phi` grid refined to `tol`.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qd_discord_numerical(
    state: *const QdState,
    n_theta: usize,
    n_phi: usize,
    tol: f64,
    out: *mut QdDiscord,
) -> QdStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let opts = NumericalOptions {
            objective_tol: tol,
            ..NumericalOptions::with_grid(n_theta, n_phi)
        };
        let rep = discord_numerical(&state.0, &opts).map_err(lib_err)?;
        *out = QdDiscord {
            mutual_info: rep.mutual_info,
            i2: rep.i2,
            q_upper_bound: rep.q_upper_bound,
            q_numerical: rep.q_numerical.unwrap_or(f64::NAN),
            delta: rep.delta.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn qd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
