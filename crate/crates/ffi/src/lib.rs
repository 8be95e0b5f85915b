//! C ABI over the copula-bounds engine.
//!
//! Every function returns a [`CbStatus`]; on failure the message is available
//! from [`cb_last_error_message`] on the same thread. Prescriptions are opaque
//! handles released with [`cb_prescription_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use copula_bounds::bounds::{bound_for, BoundSide, Prescription, Scale};
use copula_bounds::certify::{certify_prescription, GapBoxSet};
use copula_bounds::market::{bivariate_normal_cdf, trivariate_normal_cdf, CorrelationMatrix};
use copula_bounds::qcopula::{box_volume, DependenceFunction, UnitBox};
use copula_bounds::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidPrescription = 3,
    Parse = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbScale {
    Copula = 0,
    Survival = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbSide {
    Lower = 0,
    Upper = 1,
}

/// Opaque prescription with its two bound functions.
pub struct CbPrescription {
    prescription: Prescription,
    lower: DependenceFunction,
    upper: DependenceFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::InvalidPrescription(_) | Error::InconsistentQuotes(_) => CbStatus::InvalidPrescription,
        Error::Parse(_) | Error::Io(_) => CbStatus::Parse,
        Error::IllConditioned(_) | Error::IntegrabilityFailure(_) | Error::ContractViolation(_) => CbStatus::Numerical,
        _ => CbStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CbStatus>) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CbStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CbStatus::Panic
        }
    }
}

fn fail(e: Error) -> CbStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> CbStatus {
    set_error(format!("null pointer: {what}"));
    CbStatus::NullPointer
}

unsafe fn read<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], CbStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn handle<'a>(p: *const CbPrescription) -> Result<&'a CbPrescription, CbStatus> {
    p.as_ref().ok_or_else(|| null("prescription"))
}

fn side(s: CbSide) -> BoundSide {
    match s {
        CbSide::Lower => BoundSide::Lower,
        CbSide::Upper => BoundSide::Upper,
    }
}

fn wrap(p: Prescription) -> Result<Box<CbPrescription>, CbStatus> {
    let lower = bound_for(&p, BoundSide::Lower).map_err(fail)?;
    let upper = bound_for(&p, BoundSide::Upper).map_err(fail)?;
    Ok(Box::new(CbPrescription { prescription: p, lower, upper }))
}

/// Builds a prescription from `count` points stored row-major in `points`
/// (`count * dim` values) and their prescribed `values`.
///
/// # Safety
/// `points` and `values` must be valid for the given lengths and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_prescription_new(
    dim: usize,
    scale: CbScale,
    points: *const f64,
    values: *const f64,
    count: usize,
    out: *mut *mut CbPrescription,
) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let total = dim.checked_mul(count).ok_or_else(|| fail(Error::InvalidInput("size overflow".into())))?;
        let xs = read(points, total, "points")?;
        let vs = read(values, count, "values")?;
        let rows = (0..count).map(|k| (xs[k * dim..(k + 1) * dim].to_vec(), vs[k])).collect();
        let scale = match scale {
            CbScale::Copula => Scale::Copula,
            CbScale::Survival => Scale::Survival,
        };
        let p = Prescription::new(dim, scale, rows).map_err(fail)?;
        *out = Box::into_raw(wrap(p)?);
        Ok(())
    })
}

/// Parses a prescription from CSV text (`d,side` header, then rows).
///
/// # Safety
/// `csv` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_prescription_from_csv(csv: *const c_char, out: *mut *mut CbPrescription) -> CbStatus {
    guard(|| {
        if csv.is_null() {
            return Err(null("csv"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(csv).to_str().map_err(|e| fail(Error::Parse(e.to_string())))?;
        let p = Prescription::from_csv(text).map_err(fail)?;
        *out = Box::into_raw(wrap(p)?);
        Ok(())
    })
}

/// Releases a prescription; null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_prescription_free(p: *mut CbPrescription) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of the prescription, or 0 for null.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cb_prescription_dim(p: *const CbPrescription) -> usize {
    p.as_ref().map_or(0, |h| h.prescription.dim())
}

/// Evaluates both bounds at `u`.
///
/// # Safety
/// `u` must hold `len` values; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_bounds_eval(
    p: *const CbPrescription,
    u: *const f64,
    len: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> CbStatus {
    guard(|| {
        let h = handle(p)?;
        let u = read(u, len, "u")?;
        if lower.is_null() || upper.is_null() {
            return Err(null("output"));
        }
        if len != h.prescription.dim() || u.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(fail(Error::InvalidInput(format!("point must have {} coordinates in [0, 1]", h.prescription.dim()))));
        }
        *lower = h.lower.eval(u);
        *upper = h.upper.eval(u);
        Ok(())
    })
}

/// Volume of one bound over the box `[lo, hi]`.
///
/// # Safety
/// `lo` and `hi` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_box_volume(
    p: *const CbPrescription,
    which: CbSide,
    lo: *const f64,
    hi: *const f64,
    len: usize,
    out: *mut f64,
) -> CbStatus {
    guard(|| {
        let h = handle(p)?;
        let (lo, hi) = (read(lo, len, "lo")?, read(hi, len, "hi")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let b = UnitBox::from_slices(lo, hi).map_err(fail)?;
        let q = match which {
            CbSide::Lower => &h.lower,
            CbSide::Upper => &h.upper,
        };
        *out = box_volume(q, &b).map_err(fail)?;
        Ok(())
    })
}

/// Searches for a negative-volume witness inside the gaps
/// `(s_l, s_l + eps_l)` on coordinates `indices`. On success `found` is 1
/// and `u_out` (3 values) and `volume` describe the witness; otherwise
/// `found` is 0.
///
/// # Safety
/// `indices`, `s`, `eps` and `u_out` must hold 3 values; `found` and
/// `volume` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_certify(
    p: *const CbPrescription,
    which: CbSide,
    indices: *const usize,
    s: *const f64,
    eps: *const f64,
    found: *mut i32,
    u_out: *mut f64,
    volume: *mut f64,
) -> CbStatus {
    guard(|| {
        let h = handle(p)?;
        let (idx, s, eps) = (read(indices, 3, "indices")?, read(s, 3, "s")?, read(eps, 3, "eps")?);
        if found.is_null() || u_out.is_null() || volume.is_null() {
            return Err(null("output"));
        }
        let gap = GapBoxSet::new(h.prescription.dim(), [idx[0], idx[1], idx[2]], [s[0], s[1], s[2]], [eps[0], eps[1], eps[2]])
            .map_err(fail)?;
        match certify_prescription(&h.prescription, &gap, side(which)).map_err(fail)? {
            Some(c) => {
                *found = 1;
                ptr::copy_nonoverlapping(c.u.as_ptr(), u_out, 3);
                *volume = c.volume;
            }
            None => *found = 0,
        }
        Ok(())
    })
}

/// `P(Z_1 <= h, Z_2 <= k)` for standard normals with correlation `rho`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_bivariate_normal_cdf(h: f64, k: f64, rho: f64, out: *mut f64) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(-1.0..=1.0).contains(&rho) || h.is_nan() || k.is_nan() {
            return Err(fail(Error::InvalidInput("rho must lie in [-1, 1]".into())));
        }
        *out = bivariate_normal_cdf(h, k, rho);
        Ok(())
    })
}

/// `P(Z_1 <= h, Z_2 <= k, Z_3 <= l)`; `corr` holds `r12, r13, r23`.
///
/// # Safety
/// `corr` must hold 3 values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_trivariate_normal_cdf(h: f64, k: f64, l: f64, corr: *const f64, out: *mut f64) -> CbStatus {
    guard(|| {
        let c = read(corr, 3, "corr")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = CorrelationMatrix::from_upper_triangle(3, c).map_err(fail)?;
        *out = trivariate_normal_cdf(h, k, l, &r).map_err(fail)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
