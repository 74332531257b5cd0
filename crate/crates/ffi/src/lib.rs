//! C ABI over the `nkpc` toolkit.
//!
//! Every fallible function returns an [`NkpcStatus`]; on failure the message
//! is available from [`nkpc_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Strings returned through `out` parameters are owned by
//! the caller and released with [`nkpc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nkpc::backtest::{horse_race, Ledger};
use nkpc::config::RunConfig;
use nkpc::conformal::windowed_quantile;
use nkpc::data::{synth_dgp, write_csv_string, Dataset, Quarter, Series, SynthParams};
use nkpc::evaluation::{mdrae, rmse, smape, theil_u};
use nkpc::trend::hp_filter;
use nkpc::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad configuration, argument or input data.
    InvalidInput = 3,
    /// A model or statistic could not be computed on the given data.
    Computation = 4,
    Io = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Quarterly dataset.
pub struct NkpcDataset(Dataset);

/// Forecast ledger produced by a backtest.
pub struct NkpcLedger(Ledger);

/// One forecast, as read from a ledger.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NkpcRecord {
    pub origin_year: i32,
    pub origin_quarter: u8,
    pub horizon: u32,
    pub prediction: f64,
    pub actual: f64,
    pub train_n: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> NkpcStatus {
    match e {
        Error::Io(_) => NkpcStatus::Io,
        _ if e.exit_code() == 2 => NkpcStatus::InvalidInput,
        _ => NkpcStatus::Computation,
    }
}

struct Fail(NkpcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NkpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NkpcStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            NkpcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(NkpcStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NkpcStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(NkpcStatus::Computation, "string contains a nul byte".into()))?;
    write_out(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nkpc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn nkpc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nkpc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Draws `n` quarters from the synthetic data generator with default parameters.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nkpc_dataset_synth(seed: u64, n: usize, out: *mut *mut NkpcDataset) -> NkpcStatus {
    guard(|| {
        let ds = synth_dgp(seed, n, &SynthParams::default())?.dataset;
        write_out(out, Box::into_raw(Box::new(NkpcDataset(ds))), "out")
    })
}

/// Reads a CSV with a `date` column of `YYYYQn` labels; every other column is data.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nkpc_dataset_from_csv(path: *const c_char, out: *mut *mut NkpcDataset) -> NkpcStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let ds = nkpc::data::load_dataset(Path::new(p), &nkpc::data::Schema::new())?;
        write_out(out, Box::into_raw(Box::new(NkpcDataset(ds))), "out")
    })
}

/// Number of quarters, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nkpc_dataset_len(ds: *const NkpcDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// The dataset as CSV text.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nkpc_dataset_to_csv(ds: *const NkpcDataset, out: *mut *mut c_char) -> NkpcStatus {
    guard(|| {
        let d = ds.as_ref().ok_or_else(|| null("ds"))?;
        write_string(out, write_csv_string(&d.0)?)
    })
}

/// # Safety
/// `ds` must be null or a live dataset handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn nkpc_dataset_free(ds: *mut NkpcDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Runs the expanding-window horse race on `ds`.
///
/// `config_toml` holds a run configuration in TOML (null for defaults); only
/// its seed, `backtest`, `forest` and `gbt` sections are used.
///
/// # Safety
/// `ds` must be a live dataset handle, `config_toml` null or a nul-terminated
/// string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nkpc_backtest(
    ds: *const NkpcDataset,
    config_toml: *const c_char,
    out: *mut *mut NkpcLedger,
) -> NkpcStatus {
    guard(|| {
        let d = ds.as_ref().ok_or_else(|| null("ds"))?;
        let mut cfg = if config_toml.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_toml(str_arg(config_toml, "config_toml")?)?
        };
        cfg.resolve_seeds();
        cfg.validate()?;
        let ledger = horse_race(&d.0, &cfg.backtest, &cfg.forest, &cfg.gbt)?;
        write_out(out, Box::into_raw(Box::new(NkpcLedger(ledger))), "out")
    })
}

/// Number of forecast records, or 0 for a null handle.
///
/// # Safety
/// `ledger` must be null or a live ledger handle.
#[no_mangle]
pub unsafe extern "C" fn nkpc_ledger_len(ledger: *const NkpcLedger) -> usize {
    ledger.as_ref().map_or(0, |l| l.0.records.len())
}

/// Number of fits that failed and were skipped, or 0 for a null handle.
///
/// # Safety
/// `ledger` must be null or a live ledger handle.
#[no_mangle]
pub unsafe extern "C" fn nkpc_ledger_failures(ledger: *const NkpcLedger) -> usize {
    ledger.as_ref().map_or(0, |l| l.0.failures.len())
}

/// Copies record `i` into `out`; model and spec names are written to
/// `model_out` / `spec_out` when those are non-null.
///
/// # Safety
/// `ledger` must be a live ledger handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nkpc_ledger_record(
    ledger: *const NkpcLedger,
    i: usize,
    out: *mut NkpcRecord,
    model_out: *mut *mut c_char,
    spec_out: *mut *mut c_char,
) -> NkpcStatus {
    guard(|| {
        let l = ledger.as_ref().ok_or_else(|| null("ledger"))?;
        let r =
            l.0.records
                .get(i)
                .ok_or_else(|| Fail(NkpcStatus::OutOfRange, format!("record {i} of {}", l.0.records.len())))?;
        write_out(
            out,
            NkpcRecord {
                origin_year: r.origin.year(),
                origin_quarter: r.origin.quarter(),
                horizon: r.horizon as u32,
                prediction: r.prediction,
                actual: r.actual,
                train_n: r.train_n as u32,
            },
            "out",
        )?;
        if !model_out.is_null() {
            write_string(model_out, r.model.clone())?;
        }
        if !spec_out.is_null() {
            write_string(spec_out, r.spec.clone())?;
        }
        Ok(())
    })
}

/// The ledger as CSV text.
///
/// # Safety
/// `ledger` must be a live ledger handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nkpc_ledger_to_csv(ledger: *const NkpcLedger, out: *mut *mut c_char) -> NkpcStatus {
    guard(|| {
        let l = ledger.as_ref().ok_or_else(|| null("ledger"))?;
        write_string(out, l.0.to_csv())
    })
}

/// # Safety
/// `ledger` must be null or a live ledger handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn nkpc_ledger_free(ledger: *mut NkpcLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Accuracy metric selector for [`nkpc_metric`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkpcMetric {
    Rmse = 0,
    Mdrae = 1,
    Smape = 2,
    TheilU = 3,
}

/// Scores `n` forecasts against their outcomes.
///
/// # Safety
/// `actual` and `pred` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nkpc_metric(
    metric: NkpcMetric,
    actual: *const f64,
    pred: *const f64,
    n: usize,
    out: *mut f64,
) -> NkpcStatus {
    guard(|| {
        let (a, p) = (slice_arg(actual, n, "actual")?, slice_arg(pred, n, "pred")?);
        let v = match metric {
            NkpcMetric::Rmse => rmse(a, p),
            NkpcMetric::Mdrae => mdrae(a, p),
            NkpcMetric::Smape => smape(a, p),
            NkpcMetric::TheilU => theil_u(a, p),
        }?;
        write_out(out, v, "out")
    })
}

/// Hodrick–Prescott trend and cycle of `n` observations.
///
/// # Safety
/// `y`, `trend_out` and `cycle_out` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nkpc_hp_filter(
    y: *const f64,
    n: usize,
    lambda: f64,
    trend_out: *mut f64,
    cycle_out: *mut f64,
) -> NkpcStatus {
    guard(|| {
        let y = slice_arg(y, n, "y")?;
        if trend_out.is_null() || cycle_out.is_null() {
            return Err(null("trend_out/cycle_out"));
        }
        let start = Quarter::new(2000, 1)?;
        let dec = hp_filter(&Series::from_start("y", start, y.to_vec())?, lambda)?;
        std::slice::from_raw_parts_mut(trend_out, n).copy_from_slice(dec.trend.values());
        std::slice::from_raw_parts_mut(cycle_out, n).copy_from_slice(dec.cycle.values());
        Ok(())
    })
}

/// Conformal quantile of the last `min(kappa, n)` scores; `+inf` when the
/// window is too short for level `1 − alpha`.
///
/// # Safety
/// `scores` must point to `n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nkpc_windowed_quantile(
    scores: *const f64,
    n: usize,
    kappa: usize,
    alpha: f64,
    out: *mut f64,
) -> NkpcStatus {
    guard(|| {
        let s = slice_arg(scores, n, "scores")?;
        write_out(out, windowed_quantile(s, kappa, alpha)?, "out")
    })
}
