//! C ABI over `typlab`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and
//! released by `*_free`. Every fallible call returns a [`TyplabStatus`];
//! on failure [`typlab_last_error`] describes the cause for the calling
//! thread. Panics never unwind into C: they surface as
//! `TYPLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use typlab::cli::{preset, FamilyChoice};
use typlab::density::{invariant_density, DensityEstimate};
use typlab::maps::{build_family, FamilyDescriptor, FamilySpec};
use typlab::param_derivative::{orbit_with_derivative, transversality_report};
use typlab::typicality::{kolmogorov_distance, EmpiricalMeasure};
use typlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TyplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidSpec = 3,
    ParamOutOfRange = 4,
    DomainViolation = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    NoConvergence = 8,
    AnalysisFailed = 9,
    Panic = 10,
}

/// A validated family.
pub struct TyplabFamily {
    inner: FamilyDescriptor,
}

/// A piecewise-constant invariant density.
pub struct TyplabDensity {
    inner: DensityEstimate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TyplabStatus {
    match e {
        Error::InvalidSpec(_)
        | Error::InvalidSlopes(_)
        | Error::EmptyParameterInterval { .. }
        | Error::NonMonotoneBranch(_)
        | Error::InsufficientPieces(_)
        | Error::Config { .. } => TyplabStatus::InvalidSpec,
        Error::ParamOutOfRange { .. } => TyplabStatus::ParamOutOfRange,
        Error::DomainViolation { .. } | Error::DomainEscape { .. } => TyplabStatus::DomainViolation,
        Error::InvalidArgument(_) | Error::BinsTooSmall(_) | Error::NotUnimodal => {
            TyplabStatus::InvalidArgument
        }
        Error::NoConvergence(_) => TyplabStatus::NoConvergence,
        _ => TyplabStatus::AnalysisFailed,
    }
}

/// Runs `f`, recording errors and containing panics.
fn guard(f: impl FnOnce() -> Result<(), (TyplabStatus, String)>) -> TyplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TyplabStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            TyplabStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TyplabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TyplabStatus, String) {
    (TyplabStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to a live handle created by this library.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TyplabStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn typlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn typlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a family from a JSON description or a preset name
/// (`"beta"`, `"markov"`, `"skewtent"`).
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn typlab_family_new(
    spec: *const c_char,
    out: *mut *mut TyplabFamily,
) -> TyplabStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(spec)
            .to_str()
            .map_err(|e| (TyplabStatus::InvalidUtf8, e.to_string()))?;
        let choice: FamilyChoice =
            serde_json::from_str(text).unwrap_or(FamilyChoice::Preset(text.to_string()));
        let spec: FamilySpec = match choice {
            FamilyChoice::Spec(s) => s,
            FamilyChoice::Preset(name) => preset(&name, None).map_err(lib_err)?,
        };
        let inner = build_family(&spec).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(TyplabFamily { inner }));
        Ok(())
    })
}

/// # Safety
/// `family` must be null or a handle from [`typlab_family_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn typlab_family_free(family: *mut TyplabFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn typlab_family_param_interval(
    family: *const TyplabFamily,
    lo: *mut f64,
    hi: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let f = handle(family, "family")?;
        if lo.is_null() || hi.is_null() {
            return Err(null("output"));
        }
        *lo = f.inner.param_interval.lo;
        *hi = f.inner.param_interval.hi;
        Ok(())
    })
}

/// `T_a(x)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn typlab_family_evaluate(
    family: *const TyplabFamily,
    a: f64,
    x: f64,
    y: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let f = handle(family, "family")?;
        if y.is_null() {
            return Err(null("y"));
        }
        *y = f
            .inner
            .snapshot(a)
            .and_then(|s| s.evaluate(x))
            .map_err(lib_err)?;
        Ok(())
    })
}

/// Orbit `x_0..x_n` from `x0` and its parameter derivatives from `dx0`.
/// Both buffers need `n + 1` entries; `param_derivs` may be null.
///
/// # Safety
/// `points` must hold `len` doubles, as must `param_derivs` when non-null.
#[no_mangle]
pub unsafe extern "C" fn typlab_family_orbit(
    family: *const TyplabFamily,
    a: f64,
    x0: f64,
    dx0: f64,
    n: usize,
    points: *mut f64,
    param_derivs: *mut f64,
    len: usize,
) -> TyplabStatus {
    guard(|| {
        let f = handle(family, "family")?;
        if points.is_null() {
            return Err(null("points"));
        }
        if len < n + 1 {
            return Err((
                TyplabStatus::BufferTooSmall,
                format!("need {} entries, got {len}", n + 1),
            ));
        }
        let rec = orbit_with_derivative(&f.inner, a, x0, dx0, n).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(points, n + 1).copy_from_slice(&rec.points);
        if !param_derivs.is_null() {
            std::slice::from_raw_parts_mut(param_derivs, n + 1).copy_from_slice(&rec.param_derivs);
        }
        Ok(())
    })
}

/// `Λ₀`, the first `j0` with `|D_a T^j0(0)| > Λ₀` (-1 if none up to
/// `j_max`) and that derivative, for a skew tent family.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn typlab_transversality(
    family: *const TyplabFamily,
    a0: f64,
    j_max: usize,
    lambda0: *mut f64,
    j0: *mut i64,
    deriv: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let f = handle(family, "family")?;
        if lambda0.is_null() || j0.is_null() || deriv.is_null() {
            return Err(null("output"));
        }
        let r = transversality_report(&f.inner, a0, j_max).map_err(lib_err)?;
        *lambda0 = r.lambda0;
        *j0 = r.j0_found.map_or(-1, |j| j as i64);
        *deriv = r.deriv_at_j0;
        Ok(())
    })
}

/// Ulam estimate of the invariant density at `a`.
///
/// # Safety
/// `family` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn typlab_density_new(
    family: *const TyplabFamily,
    a: f64,
    bins: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut TyplabDensity,
) -> TyplabStatus {
    guard(|| {
        let f = handle(family, "family")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let snap = f.inner.snapshot(a).map_err(lib_err)?;
        let inner = invariant_density(&snap, bins, tol, max_iter).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(TyplabDensity { inner }));
        Ok(())
    })
}

/// # Safety
/// `density` must be null or a handle from [`typlab_density_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn typlab_density_free(density: *mut TyplabDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Number of bins, 0 for a null handle.
///
/// # Safety
/// `density` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn typlab_density_bins(density: *const TyplabDensity) -> usize {
    density.as_ref().map_or(0, |d| d.inner.bins)
}

/// Copies the per-bin values and the domain endpoints.
///
/// # Safety
/// `values` must hold `len` doubles; `lo` and `hi` must be valid.
#[no_mangle]
pub unsafe extern "C" fn typlab_density_values(
    density: *const TyplabDensity,
    values: *mut f64,
    len: usize,
    lo: *mut f64,
    hi: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let d = handle(density, "density")?;
        if values.is_null() || lo.is_null() || hi.is_null() {
            return Err(null("output"));
        }
        if len < d.inner.bins {
            return Err((
                TyplabStatus::BufferTooSmall,
                format!("need {} entries, got {len}", d.inner.bins),
            ));
        }
        std::slice::from_raw_parts_mut(values, d.inner.bins).copy_from_slice(&d.inner.values);
        *lo = d.inner.domain.lo;
        *hi = d.inner.domain.hi;
        Ok(())
    })
}

/// Kolmogorov distance between `samples` and the density.
///
/// # Safety
/// `samples` must hold `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn typlab_kolmogorov_distance(
    density: *const TyplabDensity,
    samples: *const f64,
    len: usize,
    out: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let d = handle(density, "density")?;
        if samples.is_null() || out.is_null() {
            return Err(null("input"));
        }
        let emp = EmpiricalMeasure::from_samples(std::slice::from_raw_parts(samples, len).to_vec())
            .map_err(lib_err)?;
        *out = kolmogorov_distance(&emp, &d.inner);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, TyplabStatus::Panic);
        let msg = unsafe { CStr::from_ptr(typlab_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }

    #[test]
    fn status_mapping() {
        assert_eq!(
            status_of(&Error::NoConvergence(3)),
            TyplabStatus::NoConvergence
        );
        assert_eq!(
            status_of(&Error::BinsTooSmall(1)),
            TyplabStatus::InvalidArgument
        );
        assert_eq!(status_of(&Error::EmptyOrbit), TyplabStatus::AnalysisFailed);
    }
}
