//! C ABI for `mobius-lab`.
//!
//! Every fallible call returns an [`MlStatus`]; on failure the message is kept per
//! thread and read with [`ml_last_error_message`]. Tables are opaque handles that
//! the caller releases with [`ml_mobius_table_free`].

use mobius_lab::arith::{chowla_log_sum, sieve_mobius, weighted_average, AverageKind, MobiusTable};
use mobius_lab::fourier::{box_dimension_estimate, FrequencySet};
use mobius_lab::nil::{NilElement, NilGroup};
use mobius_lab::numeric::e;
use mobius_lab::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    OutOfRange = 3,
    Overflow = 4,
    Unsupported = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlAverageKind {
    Cesaro = 0,
    Logarithmic = 1,
}

/// Opaque table of `mu(n)` on `[lo, hi]`.
pub struct MlMobiusTable {
    inner: MobiusTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &Error) -> MlStatus {
    match err {
        Error::TableRange { .. } | Error::InsufficientSupport { .. } => MlStatus::OutOfRange,
        Error::Overflow(_) => MlStatus::Overflow,
        Error::Unsupported(_) => MlStatus::Unsupported,
        Error::Io(_) | Error::Csv(_) => MlStatus::Internal,
        _ => MlStatus::InvalidInput,
    }
}

fn guard<F: FnOnce() -> Result<(), MlStatus>>(f: F) -> MlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            MlStatus::Internal
        }
    }
}

fn fail(err: Error) -> MlStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null(what: &str) -> MlStatus {
    set_error(&format!("null pointer: {what}"));
    MlStatus::NullPointer
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty when none. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Sieves `mu` on `[lo, hi]` into a new handle stored in `*out`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn ml_mobius_table_new(lo: u64, hi: u64, out: *mut *mut MlMobiusTable) -> MlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = sieve_mobius(lo, hi).map_err(fail)?;
        *out = Box::into_raw(Box::new(MlMobiusTable { inner }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `table` must be null or a handle from [`ml_mobius_table_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_mobius_table_free(table: *mut MlMobiusTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ml_mobius_table_get(table: *const MlMobiusTable, n: u64, out: *mut i8) -> MlStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        match t.inner.get(n) {
            Some(v) => {
                *out = v;
                Ok(())
            }
            None => {
                set_error(&format!("{n} outside [{}, {}]", t.inner.lo(), t.inner.hi()));
                Err(MlStatus::OutOfRange)
            }
        }
    })
}

/// Stores `lo` and `hi` of the table.
///
/// # Safety
/// `table` must be a live handle; `lo` and `hi` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn ml_mobius_table_range(
    table: *const MlMobiusTable,
    lo: *mut u64,
    hi: *mut u64,
) -> MlStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        if lo.is_null() || hi.is_null() {
            return Err(null("lo/hi"));
        }
        *lo = t.inner.lo();
        *hi = t.inner.hi();
        Ok(())
    })
}

/// `sum_{n <= N} mu(n + h1) mu(n + h2) / n` and its two normalisations.
///
/// # Safety
/// `table` must be a live handle; the three outputs valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn ml_chowla_log_sum(
    table: *const MlMobiusTable,
    h1: u64,
    h2: u64,
    n: u64,
    raw: *mut f64,
    ln_normalized: *mut f64,
    harmonic_normalized: *mut f64,
) -> MlStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        if raw.is_null() || ln_normalized.is_null() || harmonic_normalized.is_null() {
            return Err(null("output"));
        }
        let c = chowla_log_sum(&t.inner, h1, h2, n).map_err(fail)?;
        *raw = c.raw;
        *ln_normalized = c.ln_normalized;
        *harmonic_normalized = c.harmonic_normalized;
        Ok(())
    })
}

/// Average of `mu(n) e(n alpha)` over `n <= N`.
///
/// # Safety
/// `table` must be a live handle; `re` and `im` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn ml_twisted_average(
    table: *const MlMobiusTable,
    alpha: f64,
    n: u64,
    kind: MlAverageKind,
    re: *mut f64,
    im: *mut f64,
) -> MlStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        t.inner.require(1, n).map_err(fail)?;
        let kind = match kind {
            MlAverageKind::Cesaro => AverageKind::Cesaro,
            MlAverageKind::Logarithmic => AverageKind::Logarithmic,
        };
        let v = weighted_average(|k| f64::from(t.inner.mu(k)) * e(k as f64 * alpha), n, kind).map_err(fail)?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

unsafe fn read3(p: *const f64, what: &str) -> Result<NilElement, MlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 3);
    if s.iter().any(|v| !v.is_finite()) {
        set_error(&format!("{what}: non-finite coordinate"));
        return Err(MlStatus::InvalidInput);
    }
    Ok(NilElement::new(s))
}

unsafe fn write3(p: *mut f64, g: &NilElement) -> Result<(), MlStatus> {
    if p.is_null() {
        return Err(null("out"));
    }
    std::slice::from_raw_parts_mut(p, 3).copy_from_slice(&g.coords[..3]);
    Ok(())
}

/// Heisenberg product in coordinates `(a, b, c)`.
///
/// # Safety
/// `x`, `y` point to 3 readable doubles; `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_heisenberg_mul(x: *const f64, y: *const f64, out: *mut f64) -> MlStatus {
    guard(|| {
        let g = NilGroup::heisenberg();
        let p = g.mult(&read3(x, "x")?, &read3(y, "y")?);
        write3(out, &p)
    })
}

/// # Safety
/// `x` points to 3 readable doubles; `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_heisenberg_inverse(x: *const f64, out: *mut f64) -> MlStatus {
    guard(|| {
        let g = NilGroup::heisenberg();
        write3(out, &g.inverse(&read3(x, "x")?))
    })
}

/// Upper bound on the distance of the cosets `x Gamma` and `y Gamma`.
///
/// # Safety
/// `x`, `y` point to 3 readable doubles; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ml_heisenberg_quotient_distance(
    x: *const f64,
    y: *const f64,
    lattice_radius: i64,
    chain_depth: u32,
    out: *mut f64,
) -> MlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = NilGroup::heisenberg();
        let d = g.quotient_metric(&read3(x, "x")?, &read3(y, "y")?, lattice_radius, chain_depth as usize);
        *out = d.value;
        Ok(())
    })
}

/// Box-counting slope of the level-`level` Cantor set at scales `ratio^k`,
/// `k_min <= k <= k_max`.
///
/// # Safety
/// `slope` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ml_cantor_box_dimension(
    ratio: f64,
    level: u32,
    k_min: u32,
    k_max: u32,
    slope: *mut f64,
) -> MlStatus {
    guard(|| {
        if slope.is_null() {
            return Err(null("slope"));
        }
        if k_min > k_max {
            set_error("k_min exceeds k_max");
            return Err(MlStatus::InvalidInput);
        }
        let set = FrequencySet::cantor(ratio, level).map_err(fail)?;
        let eps: Vec<f64> = (k_min..=k_max).map(|k| ratio.powi(k as i32)).collect();
        let est = box_dimension_estimate(&set.intervals(), &eps).map_err(fail)?;
        *slope = est.slope;
        Ok(())
    })
}
