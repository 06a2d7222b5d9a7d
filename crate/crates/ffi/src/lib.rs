//! C ABI for `wpursuit`.
//!
//! Every fallible function returns a [`WpStatus`] and writes results through
//! out-pointers. On failure, `wp_last_error_message` describes the most
//! recent error on the calling thread. Handles are opaque and must be
//! released with the matching `*_free` function.
//!
//! Data matrices are passed row-major: `values[i * p + j]` is coordinate `j`
//! of sample `i`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde::Deserialize;
use wpursuit::datagen::{sample, whiten, ModelSpec, PlantedModel, TruthConfig};
use wpursuit::pursuit::{maximize_on_sphere, objective, DataMatrix, Direction, Frame, OptimizerConfig};
use wpursuit::recovery::{sequential_recovery, RecoveryReport, StoppingConfig};
use wpursuit::transport::{w2_empirical_to_std_normal, SortedProjection};
use wpursuit::Error;

/// Status codes. Values 3 to 9 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Parse = 5,
    DimensionMismatch = 6,
    Domain = 7,
    Numerical = 8,
    Unsupported = 9,
    Panic = 10,
}

/// Ground-truth separation constants of a planted model.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WpTruth {
    pub d_psi: f64,
    pub d_min_u: f64,
    pub d_w: f64,
    /// Infinite when `d_psi = d_min_u`.
    pub snr: f64,
}

/// Sample matrix.
pub struct WpData(DataMatrix);

/// Planted model with its ground truth.
pub struct WpModel(PlantedModel);

/// Result of sequential recovery.
pub struct WpReport(RecoveryReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> WpStatus {
    match e {
        Error::InvalidConfig(_) => WpStatus::InvalidConfig,
        Error::Io { .. } => WpStatus::Io,
        Error::Parse { .. } => WpStatus::Parse,
        Error::DimensionMismatch { .. } => WpStatus::DimensionMismatch,
        Error::EmptySample | Error::Domain(_) => WpStatus::Domain,
        Error::Infeasible(_) | Error::Singular(_) => WpStatus::Numerical,
        Error::Unsupported(_) => WpStatus::Unsupported,
    }
}

enum Failure {
    Status(WpStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WpStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            WpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(WpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Failure::Status(WpStatus::InvalidArgument, "string is not valid UTF-8".into()))
}

fn parse_toml<T: serde::de::DeserializeOwned + Default>(s: Option<&str>) -> Result<T, Failure> {
    match s {
        None => Ok(T::default()),
        Some(s) => toml::from_str(s).map_err(|e| Failure::Status(WpStatus::Parse, e.to_string())),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn wp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies an `n × p` row-major matrix into a new handle.
///
/// # Safety
/// `values` must point to `n * p` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_data_new(values: *const f64, n: usize, p: usize, out: *mut *mut WpData) -> WpStatus {
    guard(|| {
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Failure::Status(WpStatus::InvalidArgument, "n * p overflows".into()))?;
        let v = slice(values, len, "values")?;
        let d = DataMatrix::from_row_major(n, p, v)?;
        write(out, Box::into_raw(Box::new(WpData(d))), "out")
    })
}

/// # Safety
/// `data` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wp_data_free(data: *mut WpData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be a live handle; `n` and `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_data_dims(data: *const WpData, n: *mut usize, p: *mut usize) -> WpStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.0;
        write(n, d.n(), "n")?;
        write(p, d.p(), "p")
    })
}

/// Copies the matrix row-major into `out`, which holds `n * p` doubles.
///
/// # Safety
/// `data` must be a live handle; `out` must have room for `n * p` doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_data_values(data: *const WpData, out: *mut f64) -> WpStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, row) in d.rows().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), out.add(i * d.p()), d.p());
        }
        Ok(())
    })
}

/// Centred, symmetrically whitened copy of `data`.
///
/// # Safety
/// `data` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_data_whiten(data: *const WpData, out: *mut *mut WpData) -> WpStatus {
    guard(|| {
        let w = whiten(&as_ref(data, "data")?.0)?;
        write(out, Box::into_raw(Box::new(WpData(w))), "out")
    })
}

/// W2 distance between the empirical law of `values` (any order) and the
/// standard Gaussian.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_w2_to_std_normal(values: *const f64, len: usize, out: *mut f64) -> WpStatus {
    guard(|| {
        let s = SortedProjection::from_unsorted(slice(values, len, "values")?.to_vec())?;
        write(out, w2_empirical_to_std_normal(&s).distance, "out")
    })
}

/// Objective along the unit vector `u` of length `p`.
///
/// # Safety
/// `data` must be a live handle; `u` must hold `p` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_objective(data: *const WpData, u: *const f64, p: usize, out: *mut f64) -> WpStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.0;
        let dir = Direction::new(slice(u, p, "u")?.to_vec())?;
        write(out, objective(d, &dir)?, "out")
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RecoverOptions {
    seed: u64,
    optimizer: OptimizerConfig,
    stopping: StoppingConfig,
}

/// Unconstrained maximizer of the objective. `options` is TOML with optional
/// `seed` and `[optimizer]` keys, or null for defaults. `direction` receives
/// `p` doubles.
///
/// # Safety
/// `data` must be a live handle; `options` null or NUL-terminated;
/// `direction` must have room for `p` doubles; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_maximize(
    data: *const WpData,
    options: *const c_char,
    direction: *mut f64,
    value: *mut f64,
) -> WpStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.0;
        let opts: RecoverOptions = parse_toml(text(options)?)?;
        let cfg = OptimizerConfig {
            seed: opts.seed,
            ..opts.optimizer
        };
        let (u, v) = maximize_on_sphere(d, &Frame::empty(d.p()), &cfg)?;
        if direction.is_null() {
            return Err(null("direction"));
        }
        ptr::copy_nonoverlapping(u.as_slice().as_ptr(), direction, d.p());
        write(value, v, "value")
    })
}

/// Sequential recovery. `options` is TOML with optional `seed`,
/// `[optimizer]` and `[stopping]` tables, or null for defaults. The data
/// are used as given; whiten first if needed.
///
/// # Safety
/// `data` must be a live handle; `options` null or NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn wp_recover(data: *const WpData, options: *const c_char, out: *mut *mut WpReport) -> WpStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.0;
        let opts: RecoverOptions = parse_toml(text(options)?)?;
        let cfg = OptimizerConfig {
            seed: opts.seed,
            ..opts.optimizer
        };
        let r = sequential_recovery(d, &cfg, &opts.stopping)?;
        write(out, Box::into_raw(Box::new(WpReport(r))), "out")
    })
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wp_report_free(report: *mut WpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of retained directions.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_report_k_hat(report: *const WpReport, out: *mut usize) -> WpStatus {
    guard(|| write(out, as_ref(report, "report")?.0.k_hat, "out"))
}

/// Number of extracted directions, including a final rejected one.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_report_len(report: *const WpReport, out: *mut usize) -> WpStatus {
    guard(|| write(out, as_ref(report, "report")?.0.frame.len(), "out"))
}

/// Threshold in force when recovery stopped.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_report_threshold(report: *const WpReport, out: *mut f64) -> WpStatus {
    guard(|| write(out, as_ref(report, "report")?.0.threshold_used, "out"))
}

/// Direction `j` (zero-based) into `out` (`p` doubles) and its distance.
///
/// # Safety
/// `report` must be a live handle; `out` must have room for `p` doubles;
/// `distance` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_report_direction(
    report: *const WpReport,
    j: usize,
    out: *mut f64,
    distance: *mut f64,
) -> WpStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        let Some(dir) = r.frame.directions().get(j) else {
            return Err(Failure::Status(
                WpStatus::InvalidArgument,
                format!("direction index {j} out of range (len {})", r.frame.len()),
            ));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(dir.as_slice().as_ptr(), out, dir.dim());
        write(distance, r.distances[j], "distance")
    })
}

/// Planted model from a TOML specification (`p`, `k`, `[signal]`,
/// optional `[basis]` and `[complement]`); ground truth is computed with
/// default settings.
///
/// # Safety
/// `spec` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_model_new(spec: *const c_char, out: *mut *mut WpModel) -> WpStatus {
    guard(|| {
        let s = text(spec)?.ok_or_else(|| null("spec"))?;
        let spec: ModelSpec = toml::from_str(s).map_err(|e| Failure::Status(WpStatus::Parse, e.to_string()))?;
        let m = PlantedModel::new(spec, &TruthConfig::default())?;
        write(out, Box::into_raw(Box::new(WpModel(m))), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wp_model_free(model: *mut WpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_model_truth(model: *const WpModel, out: *mut WpTruth) -> WpStatus {
    guard(|| {
        let t = as_ref(model, "model")?.0.truth();
        write(
            out,
            WpTruth {
                d_psi: t.d_psi,
                d_min_u: t.d_min_u,
                d_w: t.d_w,
                snr: t.snr,
            },
            "out",
        )
    })
}

/// Draws `n` samples; deterministic given `seed`.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_model_sample(model: *const WpModel, n: usize, seed: u64, out: *mut *mut WpData) -> WpStatus {
    guard(|| {
        let d = sample(&as_ref(model, "model")?.0, n, seed)?;
        write(out, Box::into_raw(Box::new(WpData(d))), "out")
    })
}
