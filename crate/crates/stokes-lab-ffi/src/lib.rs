//! C ABI over `stokes-lab`.
//!
//! Results come back as opaque [`StokesMatrix`] handles that the caller
//! releases with [`stokes_matrix_free`]. Every entry point returns a
//! [`StokesStatus`]; on failure a message is kept per thread and can be read
//! with [`stokes_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use stokes_lab::classical;
use stokes_lab::error::{Category, Error};
use stokes_lab::gtrep::{self, HighestWeight, Rep};
use stokes_lab::linalg::{self, CMat};
use stokes_lab::quantum;
use stokes_lab::specfun;
use stokes_lab::verify::{self, BigSystem, NumericConfig};

/// Status codes; the nonzero values match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StokesStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    MathDomain = 3,
    Verification = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for StokesComplex {
    fn from(z: Complex64) -> Self {
        StokesComplex { re: z.re, im: z.im }
    }
}

impl From<StokesComplex> for Complex64 {
    fn from(z: StokesComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Square complex matrix owned by the library.
pub struct StokesMatrix {
    m: CMat,
}

/// Diagnostics of a numeric Stokes extraction.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StokesNumericInfo {
    pub anchor_radius: f64,
    pub ode_tol: f64,
    /// max |S(R) − S(1.4R)| over S₊ and S₋.
    pub disc_err: f64,
    pub anchor_err: f64,
    pub truncation_order: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StokesStatus {
    match e.category() {
        Category::Config => StokesStatus::Config,
        Category::MathDomain => StokesStatus::MathDomain,
        Category::Verification => StokesStatus::Verification,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (StokesStatus, String)>) -> StokesStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StokesStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            StokesStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (StokesStatus, String) {
    (status_of(&e), format!("{}: {e}", e.kind()))
}

fn null(what: &str) -> (StokesStatus, String) {
    (StokesStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_matrix(a: *const StokesComplex, n: usize) -> Result<CMat, (StokesStatus, String)> {
    if a.is_null() {
        return Err(null("matrix"));
    }
    let len = n.checked_mul(n).ok_or_else(|| (StokesStatus::Config, format!("n = {n} overflows")))?;
    let v = slice::from_raw_parts(a, len);
    Ok(CMat::from_fn(n, n, |i, j| v[i * n + j].into()))
}

unsafe fn read_weight(w: *const i64, len: usize) -> Result<HighestWeight, (StokesStatus, String)> {
    if w.is_null() {
        return Err(null("weight"));
    }
    HighestWeight::new(slice::from_raw_parts(w, len).to_vec()).map_err(lib_err)
}

unsafe fn store(out: *mut *mut StokesMatrix, m: CMat) {
    *out = Box::into_raw(Box::new(StokesMatrix { m }));
}

fn numeric(big: &BigSystem, radius: f64) -> Result<(CMat, StokesNumericInfo), (StokesStatus, String)> {
    let mut cfg = NumericConfig::auto(big);
    if radius > 0.0 {
        cfg.radius = radius;
    }
    let rep = verify::numeric_stokes(big, &cfg).map_err(lib_err)?;
    let info = StokesNumericInfo {
        anchor_radius: rep.anchor_radius,
        ode_tol: rep.ode_tol,
        disc_err: rep.disc_err,
        anchor_err: rep.anchor_err,
        truncation_order: rep.truncation_order,
    };
    Ok((rep.s_plus, info))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn stokes_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Closed-form S₊ of the classical system for the row-major n×n matrix `a`.
///
/// # Safety
/// `a` must point to n·n values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stokes_classical_plus(a: *const StokesComplex, n: usize, out: *mut *mut StokesMatrix) -> StokesStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = classical::build_system(&read_matrix(a, n)?).map_err(lib_err)?;
        let s = classical::stokes_plus_original(&sys).map_err(lib_err)?;
        store(out, s.closed.s_plus);
        Ok(())
    })
}

/// Numeric S₊ of the classical system; `radius <= 0` picks the automatic radius.
///
/// # Safety
/// As [`stokes_classical_plus`]; `info` may be null.
#[no_mangle]
pub unsafe extern "C" fn stokes_classical_numeric(
    a: *const StokesComplex,
    n: usize,
    radius: f64,
    out: *mut *mut StokesMatrix,
    info: *mut StokesNumericInfo,
) -> StokesStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = classical::build_system(&read_matrix(a, n)?).map_err(lib_err)?;
        let (s, i) = numeric(&verify::vectorize_classical(&sys), radius)?;
        store(out, s);
        if !info.is_null() {
            *info = i;
        }
        Ok(())
    })
}

/// Closed-form S_{h+} on L(λ) as an (n·dim)×(n·dim) matrix, index k·dim + p.
///
/// # Safety
/// `weight` must point to `len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stokes_quantum_plus(weight: *const i64, len: usize, h: f64, out: *mut *mut StokesMatrix) -> StokesStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = quantum::build_quantum(&read_weight(weight, len)?, h).map_err(lib_err)?;
        let s = quantum::q_stokes_original(&sys).map_err(lib_err)?;
        store(out, s.s_plus);
        Ok(())
    })
}

/// Numeric S_{h+} on L(λ); `radius <= 0` picks the automatic radius.
///
/// # Safety
/// As [`stokes_quantum_plus`]; `info` may be null.
#[no_mangle]
pub unsafe extern "C" fn stokes_quantum_numeric(
    weight: *const i64,
    len: usize,
    h: f64,
    radius: f64,
    out: *mut *mut StokesMatrix,
    info: *mut StokesNumericInfo,
) -> StokesStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = quantum::build_quantum(&read_weight(weight, len)?, h).map_err(lib_err)?;
        let big = verify::vectorize_quantum(&sys).map_err(lib_err)?;
        let (s, i) = numeric(&big, radius)?;
        store(out, s);
        if !info.is_null() {
            *info = i;
        }
        Ok(())
    })
}

/// Run the representation identity suite; `passed` receives 1 if every check holds.
///
/// # Safety
/// `weight` must point to `len` values; `passed` and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stokes_rep_check(weight: *const i64, len: usize, passed: *mut i32, count: *mut usize) -> StokesStatus {
    guard(|| {
        if passed.is_null() || count.is_null() {
            return Err(null("passed/count"));
        }
        let rep = Rep::new(&read_weight(weight, len)?).map_err(lib_err)?;
        let checks = gtrep::identity_suite(&rep).map_err(lib_err)?;
        *passed = i32::from(checks.iter().all(|c| c.passed));
        *count = checks.len();
        Ok(())
    })
}

/// Γ(z).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stokes_gamma(z: StokesComplex, out: *mut StokesComplex) -> StokesStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = specfun::gamma(z.into()).map_err(lib_err)?.into();
        Ok(())
    })
}

/// Side length of a matrix handle (0 for null).
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stokes_matrix_dim(m: *const StokesMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.m.nrows())
}

/// Copy the entries row-major into `buf`, which holds `len` values.
///
/// # Safety
/// `m` must be a live handle and `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn stokes_matrix_copy(m: *const StokesMatrix, buf: *mut StokesComplex, len: usize) -> StokesStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("matrix"))?.m;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = m.nrows();
        if len < n * n {
            return Err((StokesStatus::BufferTooSmall, format!("need {} entries, got {len}", n * n)));
        }
        let dst = slice::from_raw_parts_mut(buf, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = m[(i, j)].into();
            }
        }
        Ok(())
    })
}

/// Largest entry modulus of `a − b`; used by callers to compare closed and numeric results.
///
/// # Safety
/// Both must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stokes_matrix_max_diff(a: *const StokesMatrix, b: *const StokesMatrix, out: *mut f64) -> StokesStatus {
    guard(|| {
        let (a, b) = match (a.as_ref(), b.as_ref()) {
            (Some(a), Some(b)) => (&a.m, &b.m),
            _ => return Err(null("matrix")),
        };
        if out.is_null() {
            return Err(null("out"));
        }
        if a.shape() != b.shape() {
            return Err((StokesStatus::Config, format!("shapes {:?} and {:?} differ", a.shape(), b.shape())));
        }
        *out = linalg::max_abs(&(a - b));
        Ok(())
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stokes_matrix_free(m: *mut StokesMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
