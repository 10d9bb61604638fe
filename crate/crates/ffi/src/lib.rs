//! C ABI over `microgrid-mfc`.
//!
//! Every function returns an [`MfcStatus`]; on failure a message is available
//! from [`mfc_last_error`] on the calling thread. Handles are opaque and must
//! be released with their matching `*_free` function. Strings are UTF-8 and
//! NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use microgrid_mfc::cli::write_trace;
use microgrid_mfc::controllers::{IpiController, IpiGains, MovingAverage, SaturationLimits, UltraLocalParams};
use microgrid_mfc::engine::TraceSet;
use microgrid_mfc::scenarios::{builtin, Scenario};
use microgrid_mfc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMeasurement = 3,
    Diverged = 4,
    Config = 5,
    UnknownScenario = 6,
    NoSuchChannel = 7,
    BufferTooSmall = 8,
    Io = 9,
    Panic = 10,
}

/// i-PI controller instance.
pub struct MfcIpi {
    inner: IpiController,
}

/// Sliding-window mean.
pub struct MfcMovingAverage {
    inner: MovingAverage,
}

/// A scenario definition (built-in or loaded from TOML).
pub struct MfcScenario {
    inner: Scenario,
}

/// Recorded channels of one run.
pub struct MfcTrace {
    inner: TraceSet,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: MfcStatus, msg: &str) -> MfcStatus {
    set_last_error(msg);
    status
}

fn status_of(e: &Error) -> MfcStatus {
    match e {
        Error::InvalidMeasurement(_) => MfcStatus::InvalidMeasurement,
        Error::Diverged { .. } => MfcStatus::Diverged,
        Error::Config(_) | Error::InvalidScenario(_) => MfcStatus::Config,
        Error::UnknownScenario { .. } => MfcStatus::UnknownScenario,
        Error::NoSuchSignal(_) => MfcStatus::NoSuchChannel,
        Error::Io { .. } => MfcStatus::Io,
        _ => MfcStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), MfcStatus>) -> MfcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MfcStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(MfcStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: microgrid_mfc::Result<T>) -> Result<T, MfcStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, MfcStatus> {
    if p.is_null() {
        return Err(fail(MfcStatus::NullPointer, &format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MfcStatus::InvalidArgument, &format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, MfcStatus> {
    p.as_mut().ok_or_else(|| fail(MfcStatus::NullPointer, &format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, MfcStatus> {
    handle(p, what)
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message describing the last failure on this thread; empty after success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mfc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mfc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an i-PI controller. `order` is 1 or 2.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mfc_ipi_new(
    alpha: f64,
    order: u8,
    tc: f64,
    kp: f64,
    ki: f64,
    u_min: f64,
    u_max: f64,
    out: *mut *mut MfcIpi,
) -> MfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let params = lib(UltraLocalParams::new(alpha, order, tc))?;
        let gains = lib(IpiGains::new(kp, ki))?;
        let limits = lib(SaturationLimits::new(u_min, u_max))?;
        let inner = lib(IpiController::new(params, gains, limits))?;
        *out = boxed(MfcIpi { inner });
        Ok(())
    })
}

/// One sampling instant: feeds `y` and `y_ref`, writes the held command.
///
/// # Safety
/// `ctl` must come from [`mfc_ipi_new`]; `u_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_ipi_step(ctl: *mut MfcIpi, y: f64, y_ref: f64, u_out: *mut f64) -> MfcStatus {
    guard(|| {
        let ctl = handle(ctl, "controller")?;
        let u_out = out_ptr(u_out, "u_out")?;
        *u_out = lib(ctl.inner.step(y, y_ref))?;
        Ok(())
    })
}

/// # Safety
/// `ctl` must come from [`mfc_ipi_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mfc_ipi_free(ctl: *mut MfcIpi) {
    if !ctl.is_null() {
        drop(Box::from_raw(ctl));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_moving_average_new(window: usize, out: *mut *mut MfcMovingAverage) -> MfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(MfcMovingAverage {
            inner: lib(MovingAverage::new(window))?,
        });
        Ok(())
    })
}

/// Pushes a sample and writes the mean of the samples in the window.
///
/// # Safety
/// `ma` must come from [`mfc_moving_average_new`]; `mean_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_moving_average_push(
    ma: *mut MfcMovingAverage,
    sample: f64,
    mean_out: *mut f64,
) -> MfcStatus {
    guard(|| {
        let ma = handle(ma, "moving average")?;
        let mean_out = out_ptr(mean_out, "mean_out")?;
        *mean_out = ma.inner.push(sample);
        Ok(())
    })
}

/// # Safety
/// `ma` must come from [`mfc_moving_average_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfc_moving_average_free(ma: *mut MfcMovingAverage) {
    if !ma.is_null() {
        drop(Box::from_raw(ma));
    }
}

/// Looks up a built-in scenario by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_scenario_builtin(name: *const c_char, out: *mut *mut MfcScenario) -> MfcStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(MfcScenario {
            inner: lib(builtin(name))?,
        });
        Ok(())
    })
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_scenario_from_toml(toml: *const c_char, out: *mut *mut MfcScenario) -> MfcStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(MfcScenario {
            inner: lib(Scenario::from_toml(text))?,
        });
        Ok(())
    })
}

/// Applies a dotted-path override such as `loops.0.gains.kp` = `50`.
///
/// # Safety
/// `scenario` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mfc_scenario_set(
    scenario: *mut MfcScenario,
    key: *const c_char,
    value: *const c_char,
) -> MfcStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        s.inner = lib(s.inner.with_overrides(&[(key, value)]))?;
        Ok(())
    })
}

/// Simulates the scenario. On success `*out` owns the recorded trace.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_scenario_run(scenario: *mut MfcScenario, out: *mut *mut MfcTrace) -> MfcStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let out = out_ptr(out, "out")?;
        let traces = lib(s.inner.run())?.traces;
        let names = traces
            .names()
            .iter()
            .map(|n| CString::new(n.as_str()).expect("channel names contain no NUL"))
            .collect();
        *out = boxed(MfcTrace { inner: traces, names });
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfc_scenario_free(scenario: *mut MfcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of recorded instants.
///
/// # Safety
/// `trace` must be a live handle; `len_out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_len(trace: *const MfcTrace, len_out: *mut usize) -> MfcStatus {
    guard(|| {
        let t = handle(trace.cast_mut(), "trace")?;
        *out_ptr(len_out, "len_out")? = t.inner.len();
        Ok(())
    })
}

/// Number of channels, excluding time.
///
/// # Safety
/// `trace` must be a live handle; `count_out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_channel_count(trace: *const MfcTrace, count_out: *mut usize) -> MfcStatus {
    guard(|| {
        let t = handle(trace.cast_mut(), "trace")?;
        *out_ptr(count_out, "count_out")? = t.names.len();
        Ok(())
    })
}

/// Name of channel `index`; the string lives as long as the trace.
///
/// # Safety
/// `trace` must be a live handle; `name_out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_channel_name(
    trace: *const MfcTrace,
    index: usize,
    name_out: *mut *const c_char,
) -> MfcStatus {
    guard(|| {
        let t = handle(trace.cast_mut(), "trace")?;
        let out = out_ptr(name_out, "name_out")?;
        let name = t.names.get(index).ok_or_else(|| {
            fail(
                MfcStatus::InvalidArgument,
                &format!("channel index {index} out of range ({} channels)", t.names.len()),
            )
        })?;
        *out = name.as_ptr();
        Ok(())
    })
}

fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len_out: *mut usize) -> Result<(), MfcStatus> {
    if !len_out.is_null() {
        // SAFETY: caller passes a writable pointer or null
        unsafe { *len_out = src.len() };
    }
    if cap < src.len() {
        return Err(fail(
            MfcStatus::BufferTooSmall,
            &format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(fail(MfcStatus::NullPointer, "buf is null"));
    }
    // SAFETY: buf has room for cap >= src.len() values
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

/// Copies the time column into `buf` (capacity `cap`). `len_out`, if not
/// null, receives the required length even when the buffer is too small.
///
/// # Safety
/// `trace` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_time(
    trace: *const MfcTrace,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> MfcStatus {
    guard(|| {
        let t = handle(trace.cast_mut(), "trace")?;
        copy_out(t.inner.time(), buf, cap, len_out)
    })
}

/// Copies the named channel into `buf`; see [`mfc_trace_time`].
///
/// # Safety
/// `trace` must be a live handle; `name` NUL-terminated; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_channel(
    trace: *const MfcTrace,
    name: *const c_char,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> MfcStatus {
    guard(|| {
        let t = handle(trace.cast_mut(), "trace")?;
        let name = str_arg(name, "name")?;
        let data = t
            .inner
            .channel(name)
            .ok_or_else(|| fail(MfcStatus::NoSuchChannel, &format!("no such channel `{name}`")))?;
        copy_out(data, buf, cap, len_out)
    })
}

/// Writes the trace as CSV (header `t,<channels>`).
///
/// # Safety
/// `trace` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_write_csv(trace: *const MfcTrace, path: *const c_char) -> MfcStatus {
    guard(|| {
        let t = handle(trace.cast_mut(), "trace")?;
        let path = str_arg(path, "path")?;
        lib(write_trace(&t.inner, Path::new(path)))
    })
}

/// # Safety
/// `trace` must be a live handle and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_free(trace: *mut MfcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
