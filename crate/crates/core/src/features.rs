//! MFCC extraction.
//!
//! Per frame: Hamming window, magnitude spectrum (zero-padded to the next power of
//! two), triangular mel filter bank spanning 0 Hz to Nyquist with
//! `mel(f) = 2595·log10(1 + f/700)`, `ln(energy + 1e-10)`, orthonormal DCT-II.

use std::fmt::Write as _;
use std::ops::Range;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, FramePlan};
use crate::error::{Error, Result};

const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    /// Analysis window in samples.
    pub window_len: usize,
    /// Overlap between consecutive windows in samples.
    pub overlap: usize,
    pub n_coeffs: usize,
    pub n_mel_filters: usize,
    /// Keep c0. When false the output holds c1..=c_n, so the dimension is still `n_coeffs`.
    pub include_c0: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            window_len: 200,
            overlap: 120,
            n_coeffs: 13,
            n_mel_filters: 26,
            include_c0: true,
        }
    }
}

impl MfccConfig {
    pub fn hop(&self) -> usize {
        self.window_len.saturating_sub(self.overlap)
    }

    pub fn dim(&self) -> usize {
        self.n_coeffs
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.overlap >= self.window_len {
            return Err(Error::InvalidConfig(format!(
                "MFCC geometry needs 0 <= overlap < window_len (got window {} overlap {})",
                self.window_len, self.overlap
            )));
        }
        let highest = if self.include_c0 {
            self.n_coeffs
        } else {
            self.n_coeffs + 1
        };
        if self.n_coeffs == 0 || highest > self.n_mel_filters {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_coeffs <= n_mel_filters (got {} coefficients, {} filters, c0 {})",
                self.n_coeffs, self.n_mel_filters, self.include_c0
            )));
        }
        Ok(())
    }

    pub fn frame_plan(&self) -> Result<FramePlan> {
        self.validate()?;
        FramePlan::new(self.window_len, self.hop())
    }
}

/// Row-major `n × d` matrix of feature vectors with per-row start times.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    dim: usize,
    times: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, dim: usize, times: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be positive".into(),
            ));
        }
        if data.len() != dim * times.len() {
            return Err(Error::InvalidConfig(format!(
                "feature data length {} does not match {} rows of dimension {}",
                data.len(),
                times.len(),
                dim
            )));
        }
        if data.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data, dim, times })
    }

    /// Builds a matrix from rows, assigning times `i * row_period_s`.
    pub fn from_rows(rows: &[Vec<f64>], row_period_s: f64) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidConfig("ragged feature rows".into()));
        }
        let times = (0..rows.len()).map(|i| i as f64 * row_period_s).collect();
        Self::new(rows.concat(), dim, times)
    }

    pub fn n_rows(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mean spacing between consecutive row times (0 for fewer than two rows).
    pub fn row_period_s(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// Applies `f` to every value; used by tests of affine invariances.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let dim = self.dim;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % dim, v))
            .collect();
        Self::new(data, dim, self.times.clone())
    }

    /// TSV with a `time_s` column followed by `c0..c{d-1}`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("time_s");
        for k in 0..self.dim {
            let _ = write!(out, "\tc{k}");
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(self.rows()) {
            let _ = write!(out, "{t:.3}");
            for v in row {
                let _ = write!(out, "\t{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters over the `fft_len / 2 + 1` non-negative frequency bins.
fn mel_filter_bank(n_filters: usize, fft_len: usize, sample_rate_hz: u32) -> Vec<Vec<f64>> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    let max_mel = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_filters + 1) as f64))
        .collect();
    let n_bins = fft_len / 2 + 1;
    let bin_hz = sample_rate_hz as f64 / fft_len as f64;
    (0..n_filters)
        .map(|j| {
            let (lo, centre, hi) = (edges[j], edges[j + 1], edges[j + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f > lo && f <= centre {
                        (f - lo) / (centre - lo)
                    } else if f > centre && f < hi {
                        (hi - f) / (hi - centre)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis rows `0..n_out` for inputs of length `n_in`.
fn dct_basis(n_in: usize, n_out: usize) -> Vec<Vec<f64>> {
    let scale0 = (1.0 / n_in as f64).sqrt();
    let scale = (2.0 / n_in as f64).sqrt();
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { scale0 } else { scale };
            (0..n_in)
                .map(|m| {
                    s * (std::f64::consts::PI * k as f64 * (m as f64 + 0.5) / n_in as f64).cos()
                })
                .collect()
        })
        .collect()
}

/// Per-frame MFCC computation with reusable FFT plan and scratch buffers.
pub struct MfccExtractor {
    cfg: MfccConfig,
    plan: FramePlan,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    window: Vec<f64>,
    filters: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
    spectrum: Vec<Complex<f64>>,
    magnitude: Vec<f64>,
    log_mel: Vec<f64>,
}

impl MfccExtractor {
    pub fn new(cfg: &MfccConfig, sample_rate_hz: u32) -> Result<Self> {
        let plan = cfg.frame_plan()?;
        let fft_len = cfg.window_len.next_power_of_two();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_len);
        let window: Vec<f64> = (0..cfg.window_len)
            .map(|i| {
                if cfg.window_len == 1 {
                    1.0
                } else {
                    0.54 - 0.46
                        * (2.0 * std::f64::consts::PI * i as f64 / (cfg.window_len - 1) as f64)
                            .cos()
                }
            })
            .collect();
        let first = usize::from(!cfg.include_c0);
        Ok(Self {
            cfg: *cfg,
            plan,
            fft,
            window,
            filters: mel_filter_bank(cfg.n_mel_filters, fft_len, sample_rate_hz),
            basis: dct_basis(cfg.n_mel_filters, first + cfg.n_coeffs).split_off(first),
            spectrum: vec![Complex::new(0.0, 0.0); fft_len],
            magnitude: vec![0.0; fft_len / 2 + 1],
            log_mel: vec![0.0; cfg.n_mel_filters],
        })
    }

    pub fn plan(&self) -> FramePlan {
        self.plan
    }

    /// Appends the coefficients of one `window_len`-sample frame to `out`.
    pub fn compute(&mut self, samples: &[f64], out: &mut Vec<f64>) {
        let n = self.cfg.window_len;
        for (slot, (s, w)) in self
            .spectrum
            .iter_mut()
            .zip(samples.iter().zip(&self.window))
        {
            *slot = Complex::new(s * w, 0.0);
        }
        for slot in &mut self.spectrum[n..] {
            *slot = Complex::new(0.0, 0.0);
        }
        self.fft.process(&mut self.spectrum);
        for (p, c) in self.magnitude.iter_mut().zip(&self.spectrum) {
            *p = c.norm();
        }
        for (lm, filter) in self.log_mel.iter_mut().zip(&self.filters) {
            let energy: f64 = filter.iter().zip(&self.magnitude).map(|(w, p)| w * p).sum();
            *lm = (energy + LOG_FLOOR).ln();
        }
        for row in &self.basis {
            out.push(row.iter().zip(&self.log_mel).map(|(b, x)| b * x).sum());
        }
    }
}

pub fn mfcc(buffer: &AudioBuffer, cfg: &MfccConfig) -> Result<FeatureMatrix> {
    mfcc_frames(buffer, cfg, 0..usize::MAX)
}

/// MFCC rows for the frame indices in `frames` only (clamped to the frame
/// count). Row times are the same as in the full matrix.
pub fn mfcc_frames(
    buffer: &AudioBuffer,
    cfg: &MfccConfig,
    frames: Range<usize>,
) -> Result<FeatureMatrix> {
    let mut ex = MfccExtractor::new(cfg, buffer.sample_rate_hz())?;
    if buffer.len() < cfg.window_len {
        return Err(Error::AudioTooShort);
    }
    let plan = ex.plan();
    let sr = buffer.sample_rate_hz();
    let end = frames.end.min(plan.frame_count(buffer.len()));
    let start = frames.start.min(end);
    let mut data = Vec::with_capacity((end - start) * cfg.n_coeffs);
    let mut times = Vec::with_capacity(end - start);
    for index in start..end {
        let s = index * plan.hop;
        ex.compute(&buffer.samples()[s..s + plan.window_len], &mut data);
        times.push(plan.frame_start_s(index, sr));
    }
    FeatureMatrix::new(data, cfg.n_coeffs, times)
}
