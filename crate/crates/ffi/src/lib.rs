//! C ABI over the ddtune library.
//!
//! Conventions: every fallible call returns a [`DdtuneStatus`] and writes its
//! result through an out-pointer. On failure the thread-local message from
//! [`ddtune_last_error_message`] describes the problem. Handles are opaque
//! and released with their `_free` function; strings returned by the library
//! are released with [`ddtune_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ddtune::bounds::{family_report, pdim_pfaffian_gj, Family};
use ddtune::instances::{load_instance, GeneratorSpec, Instance};
use ddtune::logreg::{approx_path, Penalty, RegPath, DEFAULT_DELTA_DROP};
use ddtune::tune::{erm_tune, TuneConfig};
use ddtune::Error;
use num_bigint::BigUint;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdtuneStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument violates a documented precondition.
    InvalidInput = 2,
    /// JSON or file content did not parse.
    Parse = 3,
    /// The computation itself failed (I/O, numerics, size guards).
    Runtime = 4,
    /// An internal panic was caught.
    Panic = 5,
}

/// Penalty selector for regularization paths.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdtunePenalty {
    L1 = 1,
    L2 = 2,
}

/// Opaque problem instance (clustering, ssl or logreg).
pub struct DdtuneInstance(Instance);

/// Opaque ordered collection of instances.
pub struct DdtuneBatch(Vec<Instance>);

/// Opaque approximate regularization path.
pub struct DdtunePath(RegPath);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> DdtuneStatus {
    match e {
        Error::InvalidInput { .. } => DdtuneStatus::InvalidInput,
        Error::Parse { .. } | Error::Json(_) => DdtuneStatus::Parse,
        _ => DdtuneStatus::Runtime,
    }
}

struct Fail(DdtuneStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(DdtuneStatus::Parse, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DdtuneStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdtuneStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            DdtuneStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(DdtuneStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or a valid nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DdtuneStatus::InvalidInput, format!("{name} is not valid UTF-8")))
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(DdtuneStatus::Runtime, "output contains a nul byte".into()))?;
    // SAFETY: callers check `out` for null before computing `s`.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Library version, e.g. `"0.1.0"`. Static; do not free.
#[no_mangle]
pub extern "C" fn ddtune_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next library call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn ddtune_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddtune_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates one instance from a generator description such as
/// `{"task": "clustering", "n": 6, "L": 1, "k": 2}`.
///
/// # Safety
/// `generator_json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_instance_generate(
    generator_json: *const c_char,
    seed: u64,
    out: *mut *mut DdtuneInstance,
) -> DdtuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: GeneratorSpec = serde_json::from_str(str_arg(generator_json, "generator_json")?)?;
        let inst = spec.generate(seed)?;
        *out = Box::into_raw(Box::new(DdtuneInstance(inst)));
        Ok(())
    })
}

/// Loads an instance from a JSON file.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_instance_load(path: *const c_char, out: *mut *mut DdtuneInstance) -> DdtuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = load_instance(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(DdtuneInstance(inst)));
        Ok(())
    })
}

/// Parses an instance from its JSON text.
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_instance_from_json(json: *const c_char, out: *mut *mut DdtuneInstance) -> DdtuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v: serde_json::Value = serde_json::from_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(DdtuneInstance(Instance::from_json(&v)?)));
        Ok(())
    })
}

/// JSON text of an instance; free with [`ddtune_string_free`].
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_instance_to_json(inst: *const DdtuneInstance, out: *mut *mut c_char) -> DdtuneStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        out_string(serde_json::to_string(&inst.0.to_json())?, out)
    })
}

/// # Safety
/// `inst` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddtune_instance_free(inst: *mut DdtuneInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

#[no_mangle]
pub extern "C" fn ddtune_batch_new() -> *mut DdtuneBatch {
    Box::into_raw(Box::new(DdtuneBatch(Vec::new())))
}

/// Appends a copy of `inst`; the caller keeps ownership of `inst`.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn ddtune_batch_push(batch: *mut DdtuneBatch, inst: *const DdtuneInstance) -> DdtuneStatus {
    guard(|| {
        let batch = batch.as_mut().ok_or_else(|| null("batch"))?;
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        batch.0.push(inst.0.clone());
        Ok(())
    })
}

/// Number of instances; 0 for a null handle.
///
/// # Safety
/// `batch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddtune_batch_len(batch: *const DdtuneBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `batch` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddtune_batch_free(batch: *mut DdtuneBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Empirical risk minimization over a batch; `config_json` is a tuning
/// config such as `{"task": "clustering-M1"}`. Writes the full result as JSON.
///
/// # Safety
/// `batch` must be live, `config_json` a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_tune_batch(
    batch: *const DdtuneBatch,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> DdtuneStatus {
    guard(|| {
        let batch = batch.as_ref().ok_or_else(|| null("batch"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg: TuneConfig = serde_json::from_str(str_arg(config_json, "config_json")?)?;
        let result = erm_tune(&batch.0, &cfg)?;
        out_string(serde_json::to_string(&result)?, out)
    })
}

/// Pseudo-dimension bound for a cataloged family (`"H1"`, `"H2"`, `"H3"`,
/// `"G"`). `unlabeled` < 0 selects the default.
///
/// # Safety
/// `family` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_family_bound(
    family: *const c_char,
    n: u64,
    l: u64,
    unlabeled: i64,
    out: *mut f64,
) -> DdtuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = str_arg(family, "family")?;
        let fam: Family = serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Fail(DdtuneStatus::InvalidInput, format!("invalid family: unknown name {name:?}")))?;
        let u = u64::try_from(unlabeled).ok();
        *out = family_report(fam, n, l, u)?.pdim_bound;
        Ok(())
    })
}

/// Pfaffian GJ bound; `k_decimal` is the comparison count as a decimal
/// string, since it can exceed 64 bits.
///
/// # Safety
/// `k_decimal` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_pdim_gj(
    d: u64,
    q: u64,
    m: u64,
    delta: u64,
    k_decimal: *const c_char,
    out: *mut f64,
) -> DdtuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(k_decimal, "k_decimal")?;
        let k: BigUint = text
            .parse()
            .map_err(|_| Fail(DdtuneStatus::InvalidInput, format!("invalid k_decimal: {text:?}")))?;
        *out = pdim_pfaffian_gj(d, q, m, delta, &k)?;
        Ok(())
    })
}

/// Approximate regularization path for a logreg instance; `penalty` is a
/// [`DdtunePenalty`] value.
///
/// # Safety
/// `inst` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddtune_path_new(
    inst: *const DdtuneInstance,
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
    penalty: u32,
    out: *mut *mut DdtunePath,
) -> DdtuneStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let Instance::LogReg(lr) = &inst.0 else {
            return Err(Fail(DdtuneStatus::InvalidInput, "invalid inst: not a logreg instance".into()));
        };
        let pen = match penalty {
            x if x == DdtunePenalty::L1 as u32 => Penalty::L1,
            x if x == DdtunePenalty::L2 as u32 => Penalty::L2,
            other => return Err(Fail(DdtuneStatus::InvalidInput, format!("invalid penalty: {other}"))),
        };
        let path = approx_path(lr, eps, lambda_min, lambda_max, pen, DEFAULT_DELTA_DROP)?;
        *out = Box::into_raw(Box::new(DdtunePath(path)));
        Ok(())
    })
}

/// Coefficient count of the path model; 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddtune_path_dim(path: *const DdtunePath) -> usize {
    path.as_ref().map_or(0, |p| p.0.beta0.len())
}

/// Writes the path model at `lambda` into `beta[0..len]`; `len` must equal
/// [`ddtune_path_dim`].
///
/// # Safety
/// `path` must be live and `beta` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ddtune_path_eval(path: *const DdtunePath, lambda: f64, beta: *mut f64, len: usize) -> DdtuneStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        if beta.is_null() {
            return Err(null("beta"));
        }
        let p = path.0.beta0.len();
        if len != p {
            return Err(Fail(DdtuneStatus::InvalidInput, format!("invalid len: {len}, path has {p} coefficients")));
        }
        let v = path.0.eval(lambda)?;
        std::slice::from_raw_parts_mut(beta, len).copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// # Safety
/// `path` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddtune_path_free(path: *mut DdtunePath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}
