//! Method selection shared by the CLI, the benchmark and the C ABI.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::bic::{detect_fixed, detect_growing, BicConfig};
use crate::error::{Error, Result};
use crate::eval::{ChangePointSet, Segmenter};
use crate::features::mfcc;
use crate::pitch_seg::{segment as pitch_segment, PitchSegConfig, SegmentationResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pitch,
    BicGrow,
    BicFixed,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pitch, Method::BicGrow, Method::BicFixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pitch => "pitch",
            Method::BicGrow => "bic-grow",
            Method::BicFixed => "bic-fixed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method {s:?} (expected pitch, bic-grow or bic-fixed)"
                ))
            })
    }
}

/// Runs one segmentation method end to end. The BIC methods extract MFCCs
/// with `seg.mfcc`, so all methods share one feature geometry.
pub fn run(
    buffer: &AudioBuffer,
    method: Method,
    seg: &PitchSegConfig,
    bic: &BicConfig,
) -> Result<SegmentationResult> {
    match method {
        Method::Pitch => pitch_segment(buffer, seg),
        Method::BicGrow | Method::BicFixed => {
            let start = Instant::now();
            let feats = mfcc(buffer, &seg.mfcc)?;
            let points = if method == Method::BicGrow {
                detect_growing(&feats, bic)?
            } else {
                detect_fixed(&feats, bic)?
            };
            let times = ChangePointSet::new(points.iter().map(|p| p.time_s).collect())?;
            Ok(SegmentationResult::new(
                times,
                points.iter().map(|p| Some(p.score)).collect(),
                buffer.duration_seconds(),
                points.len(),
                0,
                start.elapsed().as_secs_f64(),
            ))
        }
    }
}

/// A configured method usable with [`crate::eval::benchmark`].
#[derive(Debug, Clone, Copy)]
pub struct MethodSegmenter {
    pub method: Method,
    pub seg: PitchSegConfig,
    pub bic: BicConfig,
}

impl Segmenter for MethodSegmenter {
    fn name(&self) -> String {
        self.method.to_string()
    }

    fn segment(&self, buffer: &AudioBuffer) -> Result<ChangePointSet> {
        run(buffer, self.method, &self.seg, &self.bic).map(|r| r.change_points)
    }
}
