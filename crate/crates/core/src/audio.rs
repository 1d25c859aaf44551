//! Audio loading and framing.
//!
//! Samples are held as `f64` in `[-1, 1]`. 16-bit PCM is normalized by 32768 so
//! the decoded domain is exactly `[-1, 1)`; multi-channel files are averaged to mono.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};

/// Normalized mono signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite);
        }
        if samples.iter().any(|s| s.abs() > 1.0) {
            return Err(Error::InvalidConfig(
                "sample amplitudes must lie in [-1, 1]".into(),
            ));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a buffer from 16-bit PCM values.
    pub fn from_i16(pcm: &[i16], sample_rate_hz: u32) -> Result<Self> {
        Self::new(
            pcm.iter().map(|&s| pcm_to_amplitude(s)).collect(),
            sample_rate_hz,
        )
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Converts a duration in seconds to a whole number of samples (rounded).
    pub fn seconds_to_samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate_hz as f64).round().max(0.0) as usize
    }
}

#[inline]
pub fn pcm_to_amplitude(s: i16) -> f64 {
    s as f64 / 32768.0
}

/// Inverse of [`pcm_to_amplitude`], saturating at the i16 range.
#[inline]
pub fn amplitude_to_pcm(a: f64) -> i16 {
    (a * 32768.0)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Reads a 16-bit PCM RIFF/WAVE file, averaging all channels to mono.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound {
            path: path.to_path_buf(),
        },
        _ => Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let reader = hound::WavReader::new(BufReader::new(file)).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::UnsupportedEncoding(
            "floating-point samples (only 16-bit PCM is supported)".into(),
        ));
    }
    if spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{}-bit samples (only 16-bit PCM is supported)",
            spec.bits_per_sample
        )));
    }
    if spec.channels == 0 {
        return Err(Error::MalformedWav("zero channels".into()));
    }
    let channels = spec.channels as usize;
    let pcm = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| map_hound(path, e))?;

    let samples = if channels == 1 {
        pcm.iter().map(|&s| pcm_to_amplitude(s)).collect()
    } else {
        pcm.chunks_exact(channels)
            .map(|frame| frame.iter().map(|&s| pcm_to_amplitude(s)).sum::<f64>() / channels as f64)
            .collect()
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        // hound reports short reads as a custom `Other` error.
        hound::Error::IoError(io)
            if matches!(
                io.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other
            ) =>
        {
            Error::MalformedWav(format!("truncated file ({io})"))
        }
        hound::Error::IoError(io) => Error::Io {
            path: path.to_path_buf(),
            source: io,
        },
        hound::Error::FormatError(msg) => Error::MalformedWav(msg.to_string()),
        hound::Error::Unsupported => Error::UnsupportedEncoding("unsupported WAV format".into()),
        other => Error::MalformedWav(other.to_string()),
    }
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav(path: impl AsRef<Path>, buffer: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in buffer.samples() {
        writer
            .write_sample(amplitude_to_pcm(s))
            .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

/// Window length and hop, both in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramePlan {
    pub window_len: usize,
    pub hop: usize,
}

/// One analysis frame borrowed from a buffer.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub index: usize,
    pub start_s: f64,
    pub samples: &'a [f64],
}

impl FramePlan {
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        if window_len == 0 || hop == 0 {
            return Err(Error::InvalidConfig(
                "frame window and hop must be at least one sample".into(),
            ));
        }
        Ok(Self { window_len, hop })
    }

    /// Number of complete frames over `n_samples`; a partial tail is dropped.
    pub fn frame_count(&self, n_samples: usize) -> usize {
        if n_samples < self.window_len {
            0
        } else {
            (n_samples - self.window_len) / self.hop + 1
        }
    }

    pub fn frame_start_s(&self, index: usize, sample_rate_hz: u32) -> f64 {
        (index * self.hop) as f64 / sample_rate_hz as f64
    }

    pub fn frames<'a>(
        &self,
        buffer: &'a AudioBuffer,
    ) -> impl ExactSizeIterator<Item = Frame<'a>> + 'a {
        let plan = *self;
        let sr = buffer.sample_rate_hz();
        let samples = buffer.samples();
        (0..plan.frame_count(samples.len())).map(move |index| {
            let start = index * plan.hop;
            Frame {
                index,
                start_s: plan.frame_start_s(index, sr),
                samples: &samples[start..start + plan.window_len],
            }
        })
    }
}

/// Convenience wrapper collecting `plan.frames(buffer)`.
pub fn frames<'a>(buffer: &'a AudioBuffer, plan: FramePlan) -> Vec<Frame<'a>> {
    plan.frames(buffer).collect()
}
