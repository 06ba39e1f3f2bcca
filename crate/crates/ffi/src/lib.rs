//! C ABI over `distlab`.
//!
//! Every fallible call returns a [`DlStatus`] and writes its result through an
//! out pointer. On failure the message is kept per thread and can be read with
//! [`dl_last_error_message`]. Handles are opaque and released with their
//! matching `_free` function; strings returned by the library are released
//! with [`dl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use distlab::classify::{classify, verify_report, ClassificationReport, ClassifierConfig};
use distlab::lattice::LatticeModel;
use distlab::pointset::{parse_point_set_json, LatticePointSet};
use distlab::spectrum::{additive_energy, distance_spectrum, DistanceSpectrum};
use distlab::Error;

/// Status codes; the nonzero values match the `distlab` CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    Parse = 2,
    Precondition = 3,
    Budget = 4,
    OracleCap = 5,
    Overflow = 6,
    NonConvergence = 7,
    Io = 8,
    CheckFailed = 9,
    Regression = 10,
    /// A required pointer argument was null.
    NullArgument = 20,
    /// The library panicked; this is a bug.
    Internal = 21,
}

/// A deduplicated set of lattice points.
pub struct DlPointSet(LatticePointSet);

/// The distance spectrum of a point set, sorted by key.
pub struct DlSpectrum(DistanceSpectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DlStatus {
    match e.exit_code() {
        2 => DlStatus::Parse,
        3 => DlStatus::Precondition,
        4 => DlStatus::Budget,
        5 => DlStatus::OracleCap,
        6 => DlStatus::Overflow,
        7 => DlStatus::NonConvergence,
        8 => DlStatus::Io,
        9 => DlStatus::CheckFailed,
        10 => DlStatus::Regression,
        _ => DlStatus::Internal,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DlStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(format!("{}: {e}", e.class()));
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null argument: {what}"));
            DlStatus::NullArgument
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(format!("internal error: {}", msg.unwrap_or_else(|| "panic".into())));
            DlStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail::Lib(Error::parse(format!("{what} is not UTF-8: {e}"))))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s).map(CString::into_raw).map_err(|_| Fail::Lib(Error::precondition("output contains a NUL byte")))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a point-set JSON document (`{"lattice": ..., "points": [[u1,u2],...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pointset_from_json(json: *const c_char, out: *mut *mut DlPointSet) -> DlStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let x = parse_point_set_json(text)?;
        put(out, Box::into_raw(Box::new(DlPointSet(x))), "out")
    })
}

/// Builds a point set on a built-in lattice (`Z2`, `hex`, `hex-unimodular`)
/// from `n` coordinate pairs laid out as `u1, u2, u1, u2, ...`.
///
/// # Safety
/// `lattice` must be a NUL-terminated string, `coords` must point to `2 n`
/// readable values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pointset_from_coords(
    lattice: *const c_char,
    coords: *const i64,
    n: usize,
    out: *mut *mut DlPointSet,
) -> DlStatus {
    guard(|| {
        let label = str_arg(lattice, "lattice")?;
        if coords.is_null() && n > 0 {
            return Err(Fail::Null("coords"));
        }
        let flat = if n == 0 { &[][..] } else { std::slice::from_raw_parts(coords, 2 * n) };
        let points = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let x = LatticePointSet::from_points(Arc::new(LatticeModel::builtin(label)?), points)?;
        put(out, Box::into_raw(Box::new(DlPointSet(x))), "out")
    })
}

/// Number of distinct points; zero for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_pointset_len(set: *const DlPointSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_pointset_free(set: *mut DlPointSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Exact distance spectrum; needs at least two points.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dl_spectrum_compute(set: *const DlPointSet, out: *mut *mut DlSpectrum) -> DlStatus {
    guard(|| {
        let x = ref_arg(set, "set")?;
        let s = distance_spectrum(&x.0)?;
        put(out, Box::into_raw(Box::new(DlSpectrum(s))), "out")
    })
}

/// Number of distinct distances `k`; zero for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_spectrum_len(spec: *const DlSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.0.k())
}

/// Entry `i` in increasing key order: the form value `key` (squared distance
/// divided by the lattice scale) and the ordered-pair multiplicity `m`.
///
/// # Safety
/// `spec` must be a live handle; `key` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_spectrum_entry(spec: *const DlSpectrum, i: usize, key: *mut u64, m: *mut u64) -> DlStatus {
    guard(|| {
        let s = ref_arg(spec, "spec")?;
        let e = s.0.entries.get(i).ok_or_else(|| Error::precondition(format!("entry {i} out of range (k = {})", s.0.k())))?;
        put(key, e.key, "key")?;
        put(m, e.m, "m")
    })
}

/// # Safety
/// `spec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_spectrum_free(spec: *mut DlSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Additive energy including the diagonal. Fails with `Overflow` above `2^64 - 1`.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dl_additive_energy(set: *const DlPointSet, out: *mut u64) -> DlStatus {
    guard(|| {
        let x = ref_arg(set, "set")?;
        let e = additive_energy(&x.0).0.energy_with_diagonal;
        put(out, u64::try_from(e).map_err(|_| Error::Overflow("additive energy"))?, "out")
    })
}

/// Classifies a point set and writes the report as JSON. `config_json` may be
/// null for the default constants.
///
/// # Safety
/// `set` must be a live handle, `config_json` null or NUL-terminated, and
/// `out` writable. The string written to `out` must be released with
/// [`dl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dl_classify_json(set: *const DlPointSet, config_json: *const c_char, out: *mut *mut c_char) -> DlStatus {
    guard(|| {
        let x = ref_arg(set, "set")?;
        let config: ClassifierConfig = if config_json.is_null() {
            ClassifierConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?).map_err(Error::from)?
        };
        let report = classify(&x.0, &config)?;
        let text = serde_json::to_string(&report).map_err(Error::from)?;
        put(out, into_c_string(text)?, "out")
    })
}

/// Re-verifies a classification report from its embedded points. Returns
/// `CheckFailed` when any claimed count disagrees.
///
/// # Safety
/// `report_json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dl_verify_report_json(report_json: *const c_char) -> DlStatus {
    guard(|| {
        let report: ClassificationReport = serde_json::from_str(str_arg(report_json, "report_json")?).map_err(Error::from)?;
        let v = verify_report(&report)?;
        if v.ok() {
            Ok(())
        } else {
            Err(Error::CheckFailed(v.mismatches.join(", ")).into())
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
