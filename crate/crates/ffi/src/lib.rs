//! C ABI over `spc-core`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns an
//! `SpcStatus`; on failure `spc_last_error` holds a message for the calling
//! thread until its next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use spc_core::ingest::{read_binary_waveform, read_csv_waveform, BinaryLayout, IngestError};
use spc_core::{
    spc_index, FrequencyBand, NormalizeScope, PreprocessOptions, SpcError, SpcIndex, SpcParams, ThresholdGrid,
    Waveform, WaveformError,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    AllZeroInBand = 3,
    BandOutOfRange = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcNormalize {
    Band = 0,
    Full = 1,
}

/// Every parameter that changes the index. There are no defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpcParamsC {
    pub f_min: f64,
    pub f_max: f64,
    pub thr_min: f64,
    pub thr_step: f64,
    pub thr_max: f64,
    pub dc_correct: bool,
    pub zero_pad: bool,
    pub normalize: SpcNormalize,
}

/// Opaque sampled waveform.
pub struct SpcWaveform(Waveform);

/// Opaque index result with its threshold curve.
pub struct SpcResult(SpcIndex);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(SpcStatus, String);

impl From<SpcError> for Failure {
    fn from(e: SpcError) -> Self {
        let status = match &e {
            _ if e.is_all_zero_in_band() => SpcStatus::AllZeroInBand,
            SpcError::BandOutOfRange { .. } => SpcStatus::BandOutOfRange,
            _ => SpcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<WaveformError> for Failure {
    fn from(e: WaveformError) -> Self {
        Failure(SpcStatus::InvalidArgument, e.to_string())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let status = match &e {
            IngestError::Io { .. } | IngestError::MissingFile(_) => SpcStatus::Io,
            IngestError::UnknownLayout(_) | IngestError::MissingSampleRate { .. } => SpcStatus::InvalidArgument,
            _ => SpcStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SpcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SpcStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(SpcStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Copy `len` samples into a new waveform.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spc_waveform_new(
    samples: *const f64,
    len: usize,
    sample_rate: f64,
    out: *mut *mut SpcWaveform,
) -> SpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if samples.is_null() && len > 0 {
            return Err(null("samples"));
        }
        let data = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(samples, len).to_vec() };
        store(out, SpcWaveform(Waveform::new(data, sample_rate)?));
        Ok(())
    })
}

/// Read a two-column (time, voltage) or single-column CSV file.
/// Pass `sample_rate <= 0` to take the rate from the time column.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spc_waveform_read_csv(
    path: *const c_char,
    sample_rate: f64,
    out: *mut *mut SpcWaveform,
) -> SpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        let hint = (sample_rate > 0.0).then_some(sample_rate);
        store(out, SpcWaveform(read_csv_waveform(&path, hint)?));
        Ok(())
    })
}

/// Read a headerless or fixed-header binary file; `layout` is e.g. `"i16le"`.
///
/// # Safety
/// `path` and `layout` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spc_waveform_read_binary(
    path: *const c_char,
    layout: *const c_char,
    sample_rate: f64,
    scale: f64,
    header_bytes: usize,
    out: *mut *mut SpcWaveform,
) -> SpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        if layout.is_null() {
            return Err(null("layout"));
        }
        let name = CStr::from_ptr(layout).to_string_lossy();
        let layout = BinaryLayout { header_bytes, ..name.parse::<BinaryLayout>()? }.with_scale(scale);
        store(out, SpcWaveform(read_binary_waveform(&path, &layout, sample_rate)?));
        Ok(())
    })
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_waveform_len(w: *const SpcWaveform) -> usize {
    w.as_ref().map_or(0, |w| w.0.len())
}

/// Sample rate in Hz, 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_waveform_sample_rate(w: *const SpcWaveform) -> f64 {
    w.as_ref().map_or(0.0, |w| w.0.sample_rate())
}

/// # Safety
/// `w` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spc_waveform_free(w: *mut SpcWaveform) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

fn params_of(p: &SpcParamsC) -> Result<SpcParams, Failure> {
    Ok(SpcParams {
        band: FrequencyBand::new(p.f_min, p.f_max)?,
        grid: ThresholdGrid::new(p.thr_min, p.thr_step, p.thr_max)?,
        preprocess: PreprocessOptions { dc_correct: p.dc_correct, zero_pad: p.zero_pad },
        normalize: match p.normalize {
            SpcNormalize::Band => NormalizeScope::Band,
            SpcNormalize::Full => NormalizeScope::Full,
        },
    })
}

/// Compute the index of `w`.
///
/// # Safety
/// `w` and `params` must be live pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spc_compute(
    w: *const SpcWaveform,
    params: *const SpcParamsC,
    out: *mut *mut SpcResult,
) -> SpcStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("waveform"))?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let idx = spc_index(&w.0, &params_of(params)?)?;
        store(out, SpcResult(idx));
        Ok(())
    })
}

/// Index value, NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_value(r: *const SpcResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.value)
}

/// Number of thresholds in the curve.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_len(r: *const SpcResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.curve.len())
}

/// Copy up to `capacity` curve points. Either output pointer may be null.
///
/// # Safety
/// Non-null outputs must have room for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn spc_result_curve(
    r: *const SpcResult,
    thresholds: *mut f64,
    counts: *mut u32,
    capacity: usize,
) -> SpcStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        for (i, (thr, count)) in r.0.curve.points().take(capacity).enumerate() {
            if !thresholds.is_null() {
                *thresholds.add(i) = thr;
            }
            if !counts.is_null() {
                *counts.add(i) = count;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spc_result_free(r: *mut SpcResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn spc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
