//! Rapid segmentation driven by pitch jumps.
//!
//! Pipeline: pitch track, absolute frame-to-frame pitch difference, gamma
//! correction of the normalized difference, thresholding at a fraction of the
//! maximum, then a short ΔBIC check on MFCCs around each surviving candidate.
//! MFCCs are computed only inside those verification windows.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::bic::{verify_change, DEFAULT_REG_EPSILON};
use crate::error::{Error, Result};
use crate::eval::ChangePointSet;
use crate::features::{mfcc_frames, MfccConfig};
use crate::pitch::{pitch_track, PitchConfig, PitchTrack};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchSegConfig {
    /// Threshold as a fraction of the maximum corrected difference.
    pub threshold_coef: f64,
    pub gamma: f64,
    pub gamma_c: f64,
    /// Total span of the ΔBIC check, centred on the candidate.
    pub verify_window_s: f64,
    pub lambda: f64,
    /// Candidates closer than this keep only the stronger one.
    pub min_gap_s: f64,
    /// Skip ΔBIC verification and accept every candidate.
    #[serde(default = "default_verify")]
    pub verify: bool,
    pub pitch: PitchConfig,
    pub mfcc: MfccConfig,
}

fn default_verify() -> bool {
    true
}

impl Default for PitchSegConfig {
    fn default() -> Self {
        Self {
            threshold_coef: 0.7,
            gamma: 0.3,
            gamma_c: 1.0,
            verify_window_s: 0.4,
            lambda: 1.0,
            min_gap_s: 0.5,
            verify: true,
            pitch: PitchConfig::default(),
            mfcc: MfccConfig::default(),
        }
    }
}

impl PitchSegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_coef > 0.0 && self.threshold_coef <= 1.0) {
            return Err(Error::InvalidConfig(
                "threshold_coef must lie in (0, 1]".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig("gamma must be > 0".into()));
        }
        if !(self.gamma_c > 0.0 && self.gamma_c.is_finite()) {
            return Err(Error::InvalidConfig("gamma_c must be > 0".into()));
        }
        if !(self.verify_window_s > 0.0 && self.verify_window_s.is_finite()) {
            return Err(Error::InvalidConfig("verify_window_s must be > 0".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        if !(self.min_gap_s >= 0.0 && self.min_gap_s.is_finite()) {
            return Err(Error::InvalidConfig("min_gap_s must be >= 0".into()));
        }
        self.pitch.validate()?;
        self.mfcc.validate()
    }

    /// The verification window must hold `2(d+1)` MFCC rows at this sample rate.
    pub fn validate_for(&self, sample_rate_hz: u32) -> Result<()> {
        self.validate()?;
        let hop_s = self.mfcc.hop() as f64 / sample_rate_hz as f64;
        let need = 2.0 * (self.mfcc.dim() + 1) as f64 * hop_s;
        if self.verify_window_s < need {
            return Err(Error::InvalidConfig(format!(
                "verify_window_s {} is below {need:.3} s needed for 2(d+1) feature rows",
                self.verify_window_s
            )));
        }
        Ok(())
    }
}

/// `|p[n+1] − p[n]|`, or 0 when either frame is unvoiced.
pub fn pitch_diff(track: &PitchTrack) -> Result<Vec<f64>> {
    if track.len() < 2 {
        return Err(Error::TrackTooShort(track.len()));
    }
    Ok(track
        .pitch_hz
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 {
                (w[1] - w[0]).abs()
            } else {
                0.0
            }
        })
        .collect())
}

/// Normalizes by the maximum and maps `x → c·x^gamma`. All-zero input stays zero.
pub fn gamma_correct(diff: &[f64], c: f64, gamma: f64) -> Vec<f64> {
    let max = diff.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0.0; diff.len()];
    }
    diff.iter().map(|&d| c * (d / max).powf(gamma)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Index into the difference sequence.
    pub index: usize,
    /// Midpoint between the two frames forming the difference.
    pub time_s: f64,
    pub value: f64,
}

/// Thresholds `corrected` at `threshold_coef · max`, collapses each run of
/// super-threshold values to its peak, then drops the weaker of any two
/// candidates closer than `min_gap_s`. A flat sequence has no peak and yields
/// nothing. `frame_times` has one more entry than `corrected`. Output is in
/// time order.
pub fn candidates(
    corrected: &[f64],
    frame_times: &[f64],
    threshold_coef: f64,
    min_gap_s: f64,
) -> Vec<Candidate> {
    assert_eq!(
        frame_times.len(),
        corrected.len() + 1,
        "frame_times must have one entry per frame"
    );
    let max = corrected.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = corrected.iter().copied().fold(f64::INFINITY, f64::min);
    if max.is_nan() || max <= 0.0 || min == max {
        return Vec::new();
    }
    let theta = threshold_coef * max;
    let mut peaks: Vec<Candidate> = Vec::new();
    let mut run: Option<usize> = None;
    for (i, &v) in corrected.iter().enumerate() {
        if v > theta {
            match run {
                Some(best) if corrected[best] >= v => {}
                _ => run = Some(i),
            }
        } else if let Some(best) = run.take() {
            peaks.push(make_candidate(best, corrected, frame_times));
        }
    }
    if let Some(best) = run {
        peaks.push(make_candidate(best, corrected, frame_times));
    }

    peaks.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in peaks {
        if kept
            .iter()
            .all(|k| (k.time_s - c.time_s).abs() >= min_gap_s)
        {
            kept.push(c);
        }
    }
    kept.sort_by_key(|c| c.index);
    kept
}

fn make_candidate(index: usize, corrected: &[f64], frame_times: &[f64]) -> Candidate {
    Candidate {
        index,
        time_s: 0.5 * (frame_times[index] + frame_times[index + 1]),
        value: corrected[index],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub change_points: ChangePointSet,
    /// ΔBIC of each accepted change point (`None` when verification was skipped).
    pub scores: Vec<Option<f64>>,
    /// `[start, end]` intervals tiling `[0, duration_s]`.
    pub segments: Vec<[f64; 2]>,
    pub duration_s: f64,
    pub candidates_examined: usize,
    pub candidates_rejected: usize,
    pub wall_time_s: f64,
}

impl SegmentationResult {
    pub fn new(
        change_points: ChangePointSet,
        scores: Vec<Option<f64>>,
        duration_s: f64,
        candidates_examined: usize,
        candidates_rejected: usize,
        wall_time_s: f64,
    ) -> Self {
        let mut bounds = vec![0.0];
        bounds.extend(
            change_points
                .times()
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < duration_s),
        );
        bounds.push(duration_s);
        let segments = bounds.windows(2).map(|w| [w[0], w[1]]).collect();
        Self {
            change_points,
            scores,
            segments,
            duration_s,
            candidates_examined,
            candidates_rejected,
            wall_time_s,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        self.change_points.to_text()
    }
}

pub fn segment(buffer: &AudioBuffer, cfg: &PitchSegConfig) -> Result<SegmentationResult> {
    let start = Instant::now();
    let sr = buffer.sample_rate_hz();
    cfg.validate_for(sr)?;
    if buffer.duration_seconds() <= cfg.verify_window_s {
        return Err(Error::AudioTooShort);
    }
    let track = pitch_track(buffer, &cfg.pitch)?;
    let diff = pitch_diff(&track)?;
    let corrected = gamma_correct(&diff, cfg.gamma_c, cfg.gamma);
    let centres: Vec<f64> = (0..track.len()).map(|i| track.centre_time(i)).collect();
    let cands = candidates(&corrected, &centres, cfg.threshold_coef, cfg.min_gap_s);

    let hop = cfg.mfcc.hop() as f64;
    let mut times = Vec::new();
    let mut scores = Vec::new();
    for c in &cands {
        if !cfg.verify {
            times.push(c.time_s);
            scores.push(None);
            continue;
        }
        let half = 0.5 * cfg.verify_window_s;
        let first =
            (((c.time_s - half) * sr as f64 / hop).floor().max(0.0) as usize).saturating_sub(1);
        let last = ((c.time_s + half) * sr as f64 / hop).ceil().max(0.0) as usize + 2;
        let feats = mfcc_frames(buffer, &cfg.mfcc, first..last)?;
        let v = verify_change(
            &feats,
            c.time_s,
            cfg.verify_window_s,
            cfg.lambda,
            DEFAULT_REG_EPSILON,
        );
        if v.accepted {
            times.push(c.time_s);
            scores.push(Some(v.score));
        }
    }
    let examined = cands.len();
    let rejected = examined - times.len();
    Ok(SegmentationResult::new(
        ChangePointSet::new(times)?,
        scores,
        buffer.duration_seconds(),
        examined,
        rejected,
        start.elapsed().as_secs_f64(),
    ))
}
