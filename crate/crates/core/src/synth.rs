//! Deterministic multi-speaker test signals.
//!
//! Each synthetic speaker is a sum of eight harmonics of its f0 with seeded
//! random amplitudes and phases (its "envelope"), scaled to a fixed RMS. The
//! concatenation gets white Gaussian noise on top.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::eval::ChangePointSet;

pub const N_HARMONICS: usize = 8;
/// RMS of each speaker's harmonic signal before noise.
pub const SPEAKER_RMS: f64 = 0.15;

/// f0 values cycled through when none are given. Neighbouring entries differ
/// by 70 to 90 Hz so every boundary produces a jump of similar size.
pub const DEFAULT_F0_HZ: [f64; 8] = [110.0, 190.0, 120.0, 210.0, 130.0, 200.0, 115.0, 185.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSpec {
    pub f0_hz: f64,
    pub duration_s: f64,
    /// Seed of the harmonic amplitudes and phases. Two segments with the same
    /// envelope seed share a timbre.
    pub envelope_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub speakers: Vec<SpeakerSpec>,
    pub sample_rate_hz: u32,
    /// Standard deviation of the additive white noise.
    pub noise: f64,
    /// Seed of the noise generator.
    pub seed: u64,
}

impl SynthConfig {
    /// `n` speakers of `duration_s` each with default f0 values and envelope
    /// seeds derived from `seed`.
    pub fn uniform(n: usize, duration_s: f64, seed: u64, noise: f64) -> Self {
        let speakers = (0..n)
            .map(|i| SpeakerSpec {
                f0_hz: DEFAULT_F0_HZ[i % DEFAULT_F0_HZ.len()],
                duration_s,
                envelope_seed: envelope_seed(seed, i),
            })
            .collect();
        Self {
            speakers,
            sample_rate_hz: 8000,
            noise,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.speakers.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one speaker is required".into(),
            ));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig("noise must be >= 0".into()));
        }
        for s in &self.speakers {
            if !(s.f0_hz > 0.0 && s.f0_hz.is_finite()) {
                return Err(Error::InvalidConfig(format!("invalid f0 {}", s.f0_hz)));
            }
            if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "invalid duration {}",
                    s.duration_s
                )));
            }
        }
        Ok(())
    }
}

/// Envelope seed of speaker `index` under master seed `seed`.
pub fn envelope_seed(seed: u64, index: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1)
}

/// Generated audio with the true boundaries between speakers.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub audio: AudioBuffer,
    pub boundaries: ChangePointSet,
}

fn speaker_signal(spec: &SpeakerSpec, sample_rate_hz: u32, n: usize, offset: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.envelope_seed);
    let nyquist = sample_rate_hz as f64 / 2.0;
    let harmonics: Vec<(f64, f64, f64)> = (1..=N_HARMONICS)
        .map(|k| {
            let amp = rng.random_range(0.1..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            (k as f64 * spec.f0_hz, amp, phase)
        })
        .filter(|&(f, _, _)| f < nyquist)
        .collect();
    let power: f64 = harmonics.iter().map(|&(_, a, _)| 0.5 * a * a).sum();
    let gain = if power > 0.0 {
        SPEAKER_RMS / power.sqrt()
    } else {
        0.0
    };
    (0..n)
        .map(|i| {
            let t = (offset + i) as f64 / sample_rate_hz as f64;
            gain * harmonics
                .iter()
                .map(|&(f, a, p)| a * (2.0 * PI * f * t + p).sin())
                .sum::<f64>()
        })
        .collect()
}

pub fn synthesize(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let sr = cfg.sample_rate_hz;
    let mut samples = Vec::new();
    let mut boundaries = Vec::new();
    for (i, spec) in cfg.speakers.iter().enumerate() {
        if i > 0 {
            boundaries.push(samples.len() as f64 / sr as f64);
        }
        let n = (spec.duration_s * sr as f64).round() as usize;
        let offset = samples.len();
        samples.extend(speaker_signal(spec, sr, n, offset));
    }
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal =
            Normal::new(0.0, cfg.noise).map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    Ok(SynthOutput {
        audio: AudioBuffer::new(samples, sr)?,
        boundaries: ChangePointSet::new(boundaries)?,
    })
}
