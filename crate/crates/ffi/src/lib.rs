//! C ABI for spkseg.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns a
//! [`SpksegStatus`]; on failure [`spkseg_last_error_message`] describes the
//! error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spkseg::bic::BicConfig;
use spkseg::eval::{evaluate, f_measure, ChangePointSet};
use spkseg::pipeline::{run, Method};
use spkseg::{AudioBuffer, Error, ErrorClass, PitchMethod, PitchSegConfig, SegmentationResult};

/// Status codes; non-zero values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpksegStatus {
    Ok = 0,
    /// Null pointer or invalid argument.
    Usage = 1,
    Io = 2,
    /// Malformed input or invalid configuration.
    Format = 3,
    /// Input too short or otherwise outside an operation's preconditions.
    Precondition = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpksegMethod {
    Pitch = 0,
    BicGrow = 1,
    BicFixed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpksegPitchMethod {
    Acf = 0,
    Amdf = 1,
    Cepstral = 2,
}

/// Segmentation knobs. Start from [`spkseg_options_default`] and change fields.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpksegOptions {
    pub method: SpksegMethod,
    pub pitch_method: SpksegPitchMethod,
    pub threshold_coef: f64,
    pub gamma: f64,
    pub verify_window_s: f64,
    /// Penalty weight, used by both the verification step and the BIC methods.
    pub lambda: f64,
    pub min_gap_s: f64,
    pub n_ini: usize,
    pub n_g: usize,
    pub n_max: usize,
    pub n_s: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpksegEvalReport {
    pub fd: f64,
    pub fr: f64,
    pub f: f64,
    pub n_hyp: usize,
    pub n_ref: usize,
    pub n_matched: usize,
    pub tolerance_s: f64,
}

/// Decoded mono audio.
pub struct SpksegAudio {
    inner: AudioBuffer,
}

/// Output of one segmentation run.
pub struct SpksegResult {
    inner: SegmentationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(err: Error) -> SpksegStatus {
    let status = match err.class() {
        ErrorClass::Usage => SpksegStatus::Usage,
        ErrorClass::Io => SpksegStatus::Io,
        ErrorClass::Format => SpksegStatus::Format,
        ErrorClass::Precondition => SpksegStatus::Precondition,
    };
    set_error(err.to_string());
    status
}

fn usage(msg: &str) -> SpksegStatus {
    set_error(msg.to_string());
    SpksegStatus::Usage
}

fn guard(f: impl FnOnce() -> SpksegStatus) -> SpksegStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            SpksegStatus::Internal
        }
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spkseg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a 16-bit PCM WAV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spkseg_audio_load_wav(
    path: *const c_char,
    out: *mut *mut SpksegAudio,
) -> SpksegStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return usage("null argument");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => return usage("path is not valid UTF-8"),
        };
        match spkseg::load_wav(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpksegAudio { inner }));
                SpksegStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Wraps `len` samples in `[-1, 1]`.
///
/// # Safety
/// `samples` must point to `len` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spkseg_audio_from_samples(
    samples: *const f64,
    len: usize,
    sample_rate_hz: u32,
    out: *mut *mut SpksegAudio,
) -> SpksegStatus {
    guard(|| {
        if out.is_null() || (samples.is_null() && len > 0) {
            return usage("null argument");
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(samples, len).to_vec()
        };
        match AudioBuffer::new(data, sample_rate_hz) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpksegAudio { inner }));
                SpksegStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Duration in seconds, or a negative value for a NULL handle.
///
/// # Safety
/// `audio` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spkseg_audio_duration(audio: *const SpksegAudio) -> f64 {
    audio.as_ref().map_or(-1.0, |a| a.inner.duration_seconds())
}

/// # Safety
/// `audio` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spkseg_audio_free(audio: *mut SpksegAudio) {
    if !audio.is_null() {
        drop(Box::from_raw(audio));
    }
}

#[no_mangle]
pub extern "C" fn spkseg_options_default() -> SpksegOptions {
    let seg = PitchSegConfig::default();
    let bic = BicConfig::default();
    SpksegOptions {
        method: SpksegMethod::Pitch,
        pitch_method: SpksegPitchMethod::Amdf,
        threshold_coef: seg.threshold_coef,
        gamma: seg.gamma,
        verify_window_s: seg.verify_window_s,
        lambda: seg.lambda,
        min_gap_s: seg.min_gap_s,
        n_ini: bic.n_ini,
        n_g: bic.n_g,
        n_max: bic.n_max,
        n_s: bic.n_s,
    }
}

fn configs(o: &SpksegOptions) -> (Method, PitchSegConfig, BicConfig) {
    let method = match o.method {
        SpksegMethod::Pitch => Method::Pitch,
        SpksegMethod::BicGrow => Method::BicGrow,
        SpksegMethod::BicFixed => Method::BicFixed,
    };
    let mut seg = PitchSegConfig {
        threshold_coef: o.threshold_coef,
        gamma: o.gamma,
        verify_window_s: o.verify_window_s,
        lambda: o.lambda,
        min_gap_s: o.min_gap_s,
        ..PitchSegConfig::default()
    };
    seg.pitch.method = match o.pitch_method {
        SpksegPitchMethod::Acf => PitchMethod::Acf,
        SpksegPitchMethod::Amdf => PitchMethod::Amdf,
        SpksegPitchMethod::Cepstral => PitchMethod::Cepstral,
    };
    let bic = BicConfig {
        lambda: o.lambda,
        n_ini: o.n_ini,
        n_g: o.n_g,
        n_max: o.n_max,
        n_s: o.n_s,
        ..BicConfig::default()
    };
    (method, seg, bic)
}

/// Runs segmentation. `options` may be NULL for defaults.
///
/// # Safety
/// `audio` must be a live handle, `options` NULL or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn spkseg_segment(
    audio: *const SpksegAudio,
    options: *const SpksegOptions,
    out: *mut *mut SpksegResult,
) -> SpksegStatus {
    guard(|| {
        let Some(audio) = audio.as_ref() else {
            return usage("null audio handle");
        };
        if out.is_null() {
            return usage("null output pointer");
        }
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| spkseg_options_default());
        let (method, seg, bic) = configs(&opts);
        if let Err(e) = seg.validate().and_then(|_| bic.validate(seg.mfcc.dim())) {
            return fail(e);
        }
        match run(&audio.inner, method, &seg, &bic) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpksegResult { inner }));
                SpksegStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of change points, or 0 for a NULL handle.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spkseg_result_len(result: *const SpksegResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.change_points.len())
}

/// Copies up to `capacity` change-point times into `times` and returns the
/// total count, so a call with `capacity = 0` sizes the buffer.
///
/// # Safety
/// `result` must be a live handle; `times` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn spkseg_result_times(
    result: *const SpksegResult,
    times: *mut f64,
    capacity: usize,
) -> usize {
    let Some(r) = result.as_ref() else {
        return 0;
    };
    let src = r.inner.change_points.times();
    if !times.is_null() {
        let n = src.len().min(capacity);
        ptr::copy_nonoverlapping(src.as_ptr(), times, n);
    }
    src.len()
}

/// Candidate counters and wall time of a run. Any output pointer may be NULL.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spkseg_result_stats(
    result: *const SpksegResult,
    examined: *mut usize,
    rejected: *mut usize,
    wall_time_s: *mut f64,
) -> SpksegStatus {
    let Some(r) = result.as_ref() else {
        return usage("null result handle");
    };
    if let Some(p) = examined.as_mut() {
        *p = r.inner.candidates_examined;
    }
    if let Some(p) = rejected.as_mut() {
        *p = r.inner.candidates_rejected;
    }
    if let Some(p) = wall_time_s.as_mut() {
        *p = r.inner.wall_time_s;
    }
    SpksegStatus::Ok
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spkseg_result_free(result: *mut SpksegResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

#[no_mangle]
pub extern "C" fn spkseg_f_measure(fd: f64, fr: f64) -> f64 {
    f_measure(fd, fr)
}

unsafe fn point_set(ptr: *const f64, len: usize) -> Result<ChangePointSet, Error> {
    if len == 0 {
        return Ok(ChangePointSet::empty());
    }
    ChangePointSet::new(std::slice::from_raw_parts(ptr, len).to_vec())
}

/// Scores `hypothesis` against `reference`; both must be strictly increasing.
///
/// # Safety
/// Arrays must hold the given number of doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spkseg_evaluate(
    reference: *const f64,
    n_reference: usize,
    hypothesis: *const f64,
    n_hypothesis: usize,
    tolerance_s: f64,
    out: *mut SpksegEvalReport,
) -> SpksegStatus {
    guard(|| {
        if out.is_null()
            || (reference.is_null() && n_reference > 0)
            || (hypothesis.is_null() && n_hypothesis > 0)
        {
            return usage("null argument");
        }
        if tolerance_s.is_nan() || tolerance_s < 0.0 {
            return usage("tolerance must be >= 0");
        }
        let (r, h) = match (
            point_set(reference, n_reference),
            point_set(hypothesis, n_hypothesis),
        ) {
            (Ok(r), Ok(h)) => (r, h),
            (Err(e), _) | (_, Err(e)) => return fail(e),
        };
        let rep = evaluate(&r, &h, tolerance_s);
        *out = SpksegEvalReport {
            fd: rep.fd,
            fr: rep.fr,
            f: rep.f,
            n_hyp: rep.n_hyp,
            n_ref: rep.n_ref,
            n_matched: rep.n_matched,
            tolerance_s: rep.tolerance_s,
        };
        SpksegStatus::Ok
    })
}
