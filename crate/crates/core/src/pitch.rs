//! Frame-level fundamental-frequency estimation.
//!
//! Three interchangeable detectors share one lag search range
//! `[ceil(fs / max_hz), floor(fs / min_hz)]`:
//!
//! * **ACF**: argmax of the truncated autocorrelation `R(τ)`, moved uphill on
//!   the normalized cross-correlation to its local peak; voiced when
//!   `R(τ*) / R(0) >= voicing_threshold`.
//! * **AMDF**: first local minimum of the overlap-averaged magnitude difference
//!   that is at most half the range maximum (falling back to the global minimum),
//!   voiced when `1 - D(τ*) / mean(D) >= voicing_threshold`.
//! * **Cepstral**: argmax of the real cepstrum of the Hamming-windowed frame,
//!   voiced when the normalized cross-correlation of the frame at `τ*` reaches
//!   `voicing_threshold`.
//!
//! Unvoiced frames report `0.0`. Ties always resolve to the smallest lag.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, FramePlan};
use crate::error::{Error, Result};

/// Floor added to spectral magnitudes before taking logarithms.
pub const SPECTRAL_FLOOR: f64 = 1e-10;

/// Relative gap below which two cepstral peaks are treated as tied.
const CEPSTRAL_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PitchMethod {
    Acf,
    Amdf,
    Cepstral,
}

impl PitchMethod {
    pub const ALL: [PitchMethod; 3] = [PitchMethod::Acf, PitchMethod::Amdf, PitchMethod::Cepstral];
}

impl fmt::Display for PitchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PitchMethod::Acf => "acf",
            PitchMethod::Amdf => "amdf",
            PitchMethod::Cepstral => "cepstral",
        })
    }
}

impl FromStr for PitchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acf" => Ok(PitchMethod::Acf),
            "amdf" => Ok(PitchMethod::Amdf),
            "cepstral" | "cepstrum" => Ok(PitchMethod::Cepstral),
            other => Err(Error::InvalidConfig(format!(
                "unknown pitch method '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub method: PitchMethod,
    pub min_hz: f64,
    pub max_hz: f64,
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            method: PitchMethod::Amdf,
            min_hz: 60.0,
            max_hz: 400.0,
            frame_len_s: 0.030,
            hop_s: 0.010,
            voicing_threshold: 0.3,
        }
    }
}

impl PitchConfig {
    /// Checks the sample-rate independent invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.min_hz,
            self.max_hz,
            self.frame_len_s,
            self.hop_s,
            self.voicing_threshold,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "pitch parameters must be finite".into(),
            ));
        }
        if self.min_hz <= 0.0 || self.max_hz <= self.min_hz {
            return Err(Error::InvalidConfig(format!(
                "pitch range must satisfy 0 < min_hz < max_hz (got {} .. {})",
                self.min_hz, self.max_hz
            )));
        }
        if self.frame_len_s <= 0.0 || self.hop_s <= 0.0 {
            return Err(Error::InvalidConfig(
                "pitch frame length and hop must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.voicing_threshold) {
            return Err(Error::InvalidConfig(
                "voicing_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Inclusive lag search range in samples.
    pub fn lag_range(&self, sample_rate_hz: u32) -> (usize, usize) {
        let fs = sample_rate_hz as f64;
        let lo = (fs / self.max_hz).ceil().max(1.0) as usize;
        let hi = (fs / self.min_hz).floor() as usize;
        (lo, hi.max(lo))
    }

    /// Framing in samples at the given rate.
    pub fn frame_plan(&self, sample_rate_hz: u32) -> Result<FramePlan> {
        self.validate()?;
        let fs = sample_rate_hz as f64;
        let window = (self.frame_len_s * fs).round() as usize;
        let hop = (self.hop_s * fs).round().max(1.0) as usize;
        let (_, max_lag) = self.lag_range(sample_rate_hz);
        if window <= max_lag {
            return Err(Error::InvalidConfig(format!(
                "pitch frame of {window} samples cannot hold the maximum lag {max_lag}; \
                 increase frame_len_s or min_hz"
            )));
        }
        FramePlan::new(window, hop)
    }
}

/// Truncated autocorrelation `R(τ) = Σ s(n)·s(n+τ)` for every lag of the frame.
pub fn acf(frame: &[f64]) -> Result<Vec<f64>> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    Ok((0..frame.len()).map(|tau| acf_at(frame, tau)).collect())
}

/// Average magnitude difference `Σ |s(i) - s(i+τ)|` over the overlapping samples.
pub fn amdf(frame: &[f64]) -> Result<Vec<f64>> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    Ok((0..frame.len()).map(|tau| amdf_at(frame, tau)).collect())
}

#[inline]
fn acf_at(frame: &[f64], tau: usize) -> f64 {
    lane_sum(&frame[..frame.len() - tau], &frame[tau..], |a, b| a * b)
}

#[inline]
fn amdf_at(frame: &[f64], tau: usize) -> f64 {
    lane_sum(&frame[..frame.len() - tau], &frame[tau..], |a, b| {
        (a - b).abs()
    })
}

/// `Σ f(a[i], b[i])` with eight independent accumulators so the loop vectorizes.
#[inline(always)]
fn lane_sum<T>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> T
where
    T: Copy + Default + std::ops::AddAssign + std::iter::Sum,
{
    const LANES: usize = 8;
    let mut acc = [T::default(); LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let tail: T = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(&x, &y)| f(x, y))
        .sum();
    for (xa, xb) in ca.zip(cb) {
        for k in 0..LANES {
            acc[k] += f(xa[k], xb[k]);
        }
    }
    let mut total = tail;
    for v in acc {
        total += v;
    }
    total
}

/// Normalized cross-correlation between the frame and its `tau`-shifted copy.
fn normalized_correlation(frame: &[f64], tau: usize) -> f64 {
    let head = &frame[..frame.len() - tau];
    let tail = &frame[tau..];
    let cross: f64 = head.iter().zip(tail).map(|(a, b)| a * b).sum();
    let e1: f64 = head.iter().map(|a| a * a).sum();
    let e2: f64 = tail.iter().map(|b| b * b).sum();
    let denom = (e1 * e2).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

/// Reusable FFT plans for real cepstra of a fixed frame length.
pub struct CepstrumEngine {
    frame_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl fmt::Debug for CepstrumEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CepstrumEngine")
            .field("frame_len", &self.frame_len)
            .field("fft_len", &self.buf.len())
            .finish()
    }
}

impl CepstrumEngine {
    pub fn new(frame_len: usize) -> Result<Self> {
        if frame_len == 0 {
            return Err(Error::EmptyFrame);
        }
        let m = frame_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            frame_len,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            buf: vec![Complex::new(0.0, 0.0); m],
        })
    }

    pub fn fft_len(&self) -> usize {
        self.buf.len()
    }

    /// Real cepstrum `IDFT(log(|DFT(frame)| + ε))` with zero padding to the
    /// next power of two. `out` is resized to the transform length.
    pub fn compute(&mut self, frame: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if frame.is_empty() {
            return Err(Error::EmptyFrame);
        }
        if frame.len() != self.frame_len {
            return Err(Error::InvalidConfig(format!(
                "cepstrum engine planned for {} samples, got {}",
                self.frame_len,
                frame.len()
            )));
        }
        let m = self.buf.len();
        for (slot, &s) in self.buf.iter_mut().zip(frame) {
            *slot = Complex::new(s, 0.0);
        }
        for slot in &mut self.buf[frame.len()..] {
            *slot = Complex::new(0.0, 0.0);
        }
        self.forward.process(&mut self.buf);
        for slot in &mut self.buf {
            *slot = Complex::new((slot.norm() + SPECTRAL_FLOOR).ln(), 0.0);
        }
        self.inverse.process(&mut self.buf);
        out.clear();
        out.extend(self.buf.iter().map(|c| c.re / m as f64));
        Ok(())
    }
}

/// Real cepstrum of one frame. See [`CepstrumEngine::compute`].
pub fn cepstrum(frame: &[f64]) -> Result<Vec<f64>> {
    let mut engine = CepstrumEngine::new(frame.len())?;
    let mut out = Vec::new();
    engine.compute(frame, &mut out)?;
    Ok(out)
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Lag chosen by a detector plus whether the frame passed the voicing gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEstimate {
    pub lag: usize,
    pub voiced: bool,
}

/// Per-frame detector state. Holds FFT plans and scratch space so a track can be
/// computed without reallocating per frame.
#[derive(Debug)]
pub struct PitchDetector {
    cfg: PitchConfig,
    sample_rate_hz: u32,
    lag_lo: usize,
    lag_hi: usize,
    cepstral: Option<(CepstrumEngine, Vec<f64>, Vec<f64>)>,
    scratch: Vec<f64>,
    frame32: Vec<f32>,
}

impl PitchDetector {
    pub fn new(cfg: PitchConfig, sample_rate_hz: u32) -> Result<Self> {
        cfg.validate()?;
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        let (lag_lo, lag_hi) = cfg.lag_range(sample_rate_hz);
        Ok(Self {
            cfg,
            sample_rate_hz,
            lag_lo,
            lag_hi,
            cepstral: None,
            scratch: Vec::new(),
            frame32: Vec::new(),
        })
    }

    pub fn lag_range(&self) -> (usize, usize) {
        (self.lag_lo, self.lag_hi)
    }

    /// Selected lag and voicing decision for one frame.
    pub fn estimate_lag(&mut self, frame: &[f64]) -> Result<LagEstimate> {
        if frame.is_empty() {
            return Err(Error::EmptyFrame);
        }
        if frame.len() <= self.lag_hi {
            return Err(Error::FrameTooShort {
                len: frame.len(),
                max_lag: self.lag_hi,
            });
        }
        match self.cfg.method {
            PitchMethod::Acf => Ok(self.acf_lag(frame)),
            PitchMethod::Amdf => Ok(self.amdf_lag(frame)),
            PitchMethod::Cepstral => self.cepstral_lag(frame),
        }
    }

    /// Pitch in Hz, or `0.0` when the frame is judged unvoiced.
    pub fn pitch(&mut self, frame: &[f64]) -> Result<f64> {
        let est = self.estimate_lag(frame)?;
        Ok(if est.voiced {
            self.sample_rate_hz as f64 / est.lag as f64
        } else {
            0.0
        })
    }

    fn acf_lag(&mut self, frame: &[f64]) -> LagEstimate {
        let energy = acf_at(frame, 0);
        let (mut best_lag, mut best) = (self.lag_lo, f64::NEG_INFINITY);
        for tau in self.lag_lo..=self.lag_hi {
            let r = acf_at(frame, tau);
            if r > best {
                best = r;
                best_lag = tau;
            }
        }
        // The truncated sum shrinks with the lag, which pulls the peak toward
        // shorter lags. Climb the normalized cross-correlation from the raw peak.
        let ncc = |tau: usize| normalized_correlation(frame, tau);
        let mut lag = best_lag;
        let mut here = ncc(lag);
        while lag < self.lag_hi {
            let next = ncc(lag + 1);
            if next <= here {
                break;
            }
            lag += 1;
            here = next;
        }
        while lag > self.lag_lo {
            let prev = ncc(lag - 1);
            if prev <= here {
                break;
            }
            lag -= 1;
            here = prev;
        }
        let voiced = energy > 0.0 && acf_at(frame, lag) / energy >= self.cfg.voicing_threshold;
        LagEstimate { lag, voiced }
    }

    fn amdf_lag(&mut self, frame: &[f64]) -> LagEstimate {
        let n = frame.len();
        let (lo, hi) = (self.lag_lo, self.lag_hi);
        // Average over the overlap so the sum's shrinking support does not bias
        // the search toward long lags. Neighbours τ±1 are included for the
        // local-minimum test. Sums run in f32; for 16-bit PCM input each
        // lane's partial sum is exact.
        let first = lo.saturating_sub(1);
        let last = (hi + 1).min(n - 1);
        self.frame32.clear();
        self.frame32.extend(frame.iter().map(|&v| v as f32));
        let f32s = &self.frame32;
        self.scratch.clear();
        self.scratch.extend((first..=last).map(|tau| {
            let sum = lane_sum(&f32s[..n - tau], &f32s[tau..], |a: f32, b: f32| {
                (a - b).abs()
            });
            sum as f64 / (n - tau) as f64
        }));
        let d = |tau: usize| self.scratch[tau - first];

        let (mut max, mut sum) = (f64::NEG_INFINITY, 0.0);
        let (mut min_lag, mut min) = (lo, f64::INFINITY);
        for tau in lo..=hi {
            let v = d(tau);
            max = max.max(v);
            sum += v;
            if v < min {
                min = v;
                min_lag = tau;
            }
        }
        let mean = sum / (hi - lo + 1) as f64;
        if mean <= 0.0 {
            // Silence, or a signal identical at every lag: no periodicity to report.
            return LagEstimate {
                lag: min_lag,
                voiced: false,
            };
        }

        let gate = 0.5 * max;
        let first_dip = (lo..=hi).find(|&tau| {
            let v = d(tau);
            let left = if tau > first {
                d(tau - 1)
            } else {
                f64::INFINITY
            };
            let right = if tau < last {
                d(tau + 1)
            } else {
                f64::INFINITY
            };
            v <= left && v <= right && v <= gate
        });
        let lag = first_dip.unwrap_or(min_lag);
        LagEstimate {
            lag,
            voiced: 1.0 - d(lag) / mean >= self.cfg.voicing_threshold,
        }
    }

    fn cepstral_lag(&mut self, frame: &[f64]) -> Result<LagEstimate> {
        let needs_new = self
            .cepstral
            .as_ref()
            .is_none_or(|(engine, _, _)| engine.frame_len != frame.len());
        if needs_new {
            self.cepstral = Some((
                CepstrumEngine::new(frame.len())?,
                hamming(frame.len()),
                Vec::new(),
            ));
        }
        let (engine, window, cep) = self.cepstral.as_mut().expect("engine initialized above");
        self.scratch.clear();
        self.scratch
            .extend(frame.iter().zip(window.iter()).map(|(s, w)| s * w));
        engine.compute(&self.scratch, cep)?;

        let hi = self.lag_hi.min(cep.len() - 1);
        let range = &cep[self.lag_lo..=hi];
        let best = range.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Rescaling the frame perturbs the cepstrum at rounding level, so peaks
        // that close count as ties and go to the smallest lag.
        let slack = CEPSTRAL_TIE * range.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let best_lag = self.lag_lo
            + range
                .iter()
                .position(|&c| c >= best - slack)
                .expect("range is non-empty");
        let voiced = normalized_correlation(frame, best_lag) >= self.cfg.voicing_threshold;
        Ok(LagEstimate {
            lag: best_lag,
            voiced,
        })
    }
}

/// Pitch of a single frame in Hz (`0.0` if unvoiced).
pub fn pitch_frame(frame: &[f64], sample_rate_hz: u32, cfg: &PitchConfig) -> Result<f64> {
    PitchDetector::new(*cfg, sample_rate_hz)?.pitch(frame)
}

/// Per-frame pitch estimates; `0.0` marks unvoiced frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    /// Frame start times in seconds.
    pub times: Vec<f64>,
    pub pitch_hz: Vec<f64>,
    /// Analysis frame length in seconds (used to locate frame centres).
    pub frame_len_s: f64,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn centre_time(&self, index: usize) -> f64 {
        self.times[index] + 0.5 * self.frame_len_s
    }

    /// Two-column TSV with a `time_s\tpitch_hz` header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("time_s\tpitch_hz\n");
        for (t, p) in self.times.iter().zip(&self.pitch_hz) {
            out.push_str(&format!("{t:.3}\t{p:.3}\n"));
        }
        out
    }
}

pub fn pitch_track(buffer: &AudioBuffer, cfg: &PitchConfig) -> Result<PitchTrack> {
    let sr = buffer.sample_rate_hz();
    let plan = cfg.frame_plan(sr)?;
    if buffer.len() < plan.window_len {
        return Err(Error::AudioTooShort);
    }
    let mut detector = PitchDetector::new(*cfg, sr)?;
    let n = plan.frame_count(buffer.len());
    let mut times = Vec::with_capacity(n);
    let mut pitch_hz = Vec::with_capacity(n);
    for frame in plan.frames(buffer) {
        times.push(frame.start_s);
        pitch_hz.push(detector.pitch(frame.samples)?);
    }
    Ok(PitchTrack {
        times,
        pitch_hz,
        frame_len_s: plan.window_len as f64 / sr as f64,
    })
}
