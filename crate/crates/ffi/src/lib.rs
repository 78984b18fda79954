//! C interface to crowdcast.
//!
//! Every function returns a [`CcStatus`]. On failure a message for the calling
//! thread is available from [`cc_last_error_message`]. Objects are opaque
//! handles released with their `_free` function; strings returned by the
//! library are released with [`cc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crowdcast::error::Error;
use crowdcast::ets::{self, EtsConfig, EtsModel, ModelKind};
use crowdcast::metrics::{self, ScoredLabel};
use crowdcast::series::{self, Target, TimeSeries};
use crowdcast::sim;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    InsufficientData = 5,
    /// The quantity is undefined for this input (e.g. AUC with one class).
    Undefined = 6,
    Numeric = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Internal = 10,
}

/// Hourly series handle.
pub struct CcSeries(TimeSeries);

/// Fitted model handle.
pub struct CcModel(EtsModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phi: f64,
    /// In-sample sum of squared one-step errors.
    pub sse: f64,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> CcStatus {
    match e {
        Error::Parse { .. } | Error::Csv(_) | Error::InvalidSeries(_) | Error::Duplicate(_) => CcStatus::Parse,
        Error::InsufficientData(_) | Error::EmptySeries(_) => CcStatus::InsufficientData,
        Error::UndefinedAuc(_) => CcStatus::Undefined,
        Error::Multiplicative(_) | Error::NonFinite { .. } => CcStatus::Numeric,
        Error::InvalidArgument(_) | Error::Config(_) | Error::RangeMismatch(_) => CcStatus::InvalidArgument,
        Error::Store(_) | Error::Io(_) => CcStatus::Internal,
    }
}

struct Fail(CcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside crowdcast");
            CcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CcStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(CcStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn parse_arg<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Fail> {
    s.parse().map_err(Fail::from)
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `timestamp,value` CSV text into a series. `target` is `arrivals`
/// or `occupancy`.
///
/// # Safety
/// `csv` and `target` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_series_from_csv(
    csv: *const c_char,
    target: *const c_char,
    out: *mut *mut CcSeries,
) -> CcStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let text = read_str(csv, "csv")?;
        let target: Target = parse_arg(read_str(target, "target")?)?;
        let s = series::parse_hourly_csv(text, target)?;
        *out = Box::into_raw(Box::new(CcSeries(s)));
        Ok(())
    })
}

/// Number of hourly slots, gaps included.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_series_len(series: *const CcSeries, out: *mut usize) -> CcStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        *out_ref(out, "out")? = s.0.len();
        Ok(())
    })
}

/// Writes the series as CSV text. Free the result with [`cc_string_free`].
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_series_to_csv(series: *const CcSeries, out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let out = out_ref(out, "out")?;
        let text = CString::new(s.0.to_csv()).map_err(|e| Fail(CcStatus::Internal, e.to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `series` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cc_series_free(series: *mut CcSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Crowding threshold: the `quantile` of the observed values, rounded to an
/// integer.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_quartile_threshold(series: *const CcSeries, quantile: f64, out: *mut u32) -> CcStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        *out_ref(out, "out")? = series::quartile_threshold(&s.0, quantile)?;
        Ok(())
    })
}

/// Fits a Holt-Winters model (`AHWM`, `MHWM` or `HWDM`) with daily
/// seasonality to the whole series.
///
/// # Safety
/// `series` must be a live handle, `model_id` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_model_fit(
    series: *const CcSeries,
    model_id: *const c_char,
    out: *mut *mut CcModel,
) -> CcStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let out = out_ref(out, "out")?;
        let kind: ModelKind = parse_arg(read_str(model_id, "model_id")?)?;
        let model = ets::fit(&s.0, &EtsConfig::new(kind))?;
        *out = Box::into_raw(Box::new(CcModel(model)));
        Ok(())
    })
}

/// Writes `horizon` point forecasts into `buf`, which holds `buf_len` values.
///
/// # Safety
/// `model` must be a live handle and `buf` valid for `buf_len` writes.
#[no_mangle]
pub unsafe extern "C" fn cc_model_forecast(
    model: *const CcModel,
    horizon: usize,
    buf: *mut f64,
    buf_len: usize,
) -> CcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if buf_len < horizon {
            return Err(Fail(CcStatus::BufferTooSmall, format!("buffer holds {buf_len} values, {horizon} needed")));
        }
        let values = m.0.forecast(horizon)?;
        std::slice::from_raw_parts_mut(buf, horizon).copy_from_slice(&values);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_model_params(model: *const CcModel, out: *mut CcParams) -> CcStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        *out_ref(out, "out")? = CcParams {
            alpha: m.params.alpha,
            beta: m.params.beta,
            gamma: m.params.gamma,
            phi: m.params.phi,
            sse: m.sse,
            converged: m.converged,
        };
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cc_model_free(model: *mut CcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Area under the ROC curve for `n` scores with 0/1 labels. Returns
/// `Undefined` when only one class is present.
///
/// # Safety
/// `scores` and `labels` must be valid for `n` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> CcStatus {
    guard(|| {
        if n > 0 && (scores.is_null() || labels.is_null()) {
            return Err(null("scores/labels"));
        }
        let out = out_ref(out, "out")?;
        let items: Vec<ScoredLabel> = if n == 0 {
            Vec::new()
        } else {
            let s = std::slice::from_raw_parts(scores, n);
            let l = std::slice::from_raw_parts(labels, n);
            s.iter().zip(l).map(|(&score, &label)| ScoredLabel { score, label: label != 0 }).collect()
        };
        *out = metrics::roc_auc(&items)?;
        Ok(())
    })
}

/// Simulates `days` of hourly arrivals and occupancy with the built-in ED
/// profile.
///
/// # Safety
/// `arrivals` and `occupancy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_simulate_default(
    days: u32,
    seed: u64,
    arrivals: *mut *mut CcSeries,
    occupancy: *mut *mut CcSeries,
) -> CcStatus {
    guard(|| {
        let a = out_ref(arrivals, "arrivals")?;
        let o = out_ref(occupancy, "occupancy")?;
        let run = sim::simulate(&sim::default_profile(), days, seed)?;
        *a = Box::into_raw(Box::new(CcSeries(run.arrivals)));
        *o = Box::into_raw(Box::new(CcSeries(run.occupancy)));
        Ok(())
    })
}
