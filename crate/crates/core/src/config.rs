//! Flat `key = value` run configuration.
//!
//! Layers are applied in order: defaults, then a config file, then
//! command-line overrides. Later layers win. Lines starting with `#` and
//! trailing `# ...` comments are ignored.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bic::BicConfig;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_TOLERANCE_S;
use crate::pipeline::Method;
use crate::pitch_seg::PitchSegConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub method: Method,
    pub tolerance_s: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub seg: PitchSegConfig,
    pub bic: BicConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Pitch,
            tolerance_s: DEFAULT_TOLERANCE_S,
            seed: 42,
            out: None,
            seg: PitchSegConfig::default(),
            bic: BicConfig::default(),
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "method",
    "tolerance_s",
    "seed",
    "out",
    "pitch.method",
    "pitch.min_hz",
    "pitch.max_hz",
    "pitch.frame_len_s",
    "pitch.hop_s",
    "pitch.voicing_threshold",
    "mfcc.window_len",
    "mfcc.overlap",
    "mfcc.n_coeffs",
    "mfcc.n_mel_filters",
    "mfcc.include_c0",
    "bic.lambda",
    "bic.reg_epsilon",
    "bic.n_ini",
    "bic.n_g",
    "bic.n_max",
    "bic.n_s",
    "bic.fixed_window",
    "seg.threshold_coef",
    "seg.gamma",
    "seg.gamma_c",
    "seg.verify_window_s",
    "seg.lambda",
    "seg.min_gap_s",
    "seg.verify",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "{key}: expected a boolean, got {value:?}"
        ))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let p = &mut self.seg.pitch;
        let m = &mut self.seg.mfcc;
        let b = &mut self.bic;
        match key.trim() {
            "method" => self.method = v.parse()?,
            "tolerance_s" => self.tolerance_s = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "pitch.method" => p.method = v.parse()?,
            "pitch.min_hz" => p.min_hz = parse(key, v)?,
            "pitch.max_hz" => p.max_hz = parse(key, v)?,
            "pitch.frame_len_s" => p.frame_len_s = parse(key, v)?,
            "pitch.hop_s" => p.hop_s = parse(key, v)?,
            "pitch.voicing_threshold" => p.voicing_threshold = parse(key, v)?,
            "mfcc.window_len" => m.window_len = parse(key, v)?,
            "mfcc.overlap" => m.overlap = parse(key, v)?,
            "mfcc.n_coeffs" => m.n_coeffs = parse(key, v)?,
            "mfcc.n_mel_filters" => m.n_mel_filters = parse(key, v)?,
            "mfcc.include_c0" => m.include_c0 = parse_bool(key, v)?,
            "bic.lambda" => b.lambda = parse(key, v)?,
            "bic.reg_epsilon" => b.reg_epsilon = parse(key, v)?,
            "bic.n_ini" => b.n_ini = parse(key, v)?,
            "bic.n_g" => b.n_g = parse(key, v)?,
            "bic.n_max" => b.n_max = parse(key, v)?,
            "bic.n_s" => b.n_s = parse(key, v)?,
            "bic.fixed_window" => {
                b.fixed_window = if v.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "seg.threshold_coef" => self.seg.threshold_coef = parse(key, v)?,
            "seg.gamma" => self.seg.gamma = parse(key, v)?,
            "seg.gamma_c" => self.seg.gamma_c = parse(key, v)?,
            "seg.verify_window_s" => self.seg.verify_window_s = parse(key, v)?,
            "seg.lambda" => self.seg.lambda = parse(key, v)?,
            "seg.min_gap_s" => self.seg.min_gap_s = parse(key, v)?,
            "seg.verify" => self.seg.verify = parse_bool(key, v)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", no + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound {
                path: path.to_path_buf(),
            },
            _ => Error::Io {
                path: path.to_path_buf(),
                source: e,
            },
        })?;
        self.apply_text(&text)
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("expected key=value, got {assignment:?}"))
        })?;
        self.set(key, value)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_s >= 0.0 && self.tolerance_s.is_finite()) {
            return Err(Error::InvalidConfig("tolerance_s must be >= 0".into()));
        }
        self.seg.validate()?;
        self.bic.validate(self.seg.mfcc.dim())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
