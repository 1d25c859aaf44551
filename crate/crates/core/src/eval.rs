//! Scoring hypothesized change points against a reference, and timing
//! segmenters head to head.
//!
//! `FD = unmatched hypotheses / hypotheses`, `FR = unmatched references / references`,
//! `F = 2(1−FD)(1−FR) / (2 − FD − FR)`. An empty denominator gives a rate of 0.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE_S: f64 = 0.5;

/// Strictly increasing, finite, non-negative times in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChangePointSet(Vec<f64>);

impl ChangePointSet {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::InvalidChangePoints(format!(
                "time {t} is not a finite non-negative number"
            )));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidChangePoints(format!(
                "times must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(Self(times))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Parses one decimal timestamp per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let t: f64 = line.parse().map_err(|_| {
                Error::InvalidChangePoints(format!("line {}: {line:?} is not a number", no + 1))
            })?;
            times.push(t);
        }
        Self::new(times)
    }

    /// One timestamp per line with three decimals, newline-terminated.
    pub fn to_text(&self) -> String {
        self.0.iter().map(|t| format!("{t:.3}\n")).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ChangePointSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ChangePointSet> for Vec<f64> {
    fn from(s: ChangePointSet) -> Self {
        s.0
    }
}

/// One-to-one pairing of reference and hypothesis indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn n_matched(&self) -> usize {
        self.pairs.len()
    }
}

/// Pairs references with hypotheses lying within `tolerance_s`.
///
/// References are visited in time order and each takes the earliest unused
/// hypothesis inside its tolerance window. Since all windows have the same
/// width this yields a maximum-cardinality matching.
pub fn match_points(
    reference: &ChangePointSet,
    hypothesis: &ChangePointSet,
    tolerance_s: f64,
) -> Matching {
    let hyp = hypothesis.times();
    let mut pairs = Vec::new();
    let mut j = 0;
    for (i, &r) in reference.times().iter().enumerate() {
        while j < hyp.len() && r - hyp[j] > tolerance_s {
            j += 1;
        }
        if j < hyp.len() && (hyp[j] - r).abs() <= tolerance_s {
            pairs.push((i, j));
            j += 1;
        }
    }
    Matching { pairs }
}

pub fn fd_rate(n_hyp: usize, n_matched: usize) -> f64 {
    if n_hyp == 0 {
        0.0
    } else {
        (n_hyp - n_matched.min(n_hyp)) as f64 / n_hyp as f64
    }
}

pub fn fr_rate(n_ref: usize, n_matched: usize) -> f64 {
    if n_ref == 0 {
        0.0
    } else {
        (n_ref - n_matched.min(n_ref)) as f64 / n_ref as f64
    }
}

pub fn f_measure(fd: f64, fr: f64) -> f64 {
    let denom = 2.0 - fd - fr;
    if denom <= 0.0 {
        0.0
    } else {
        2.0 * (1.0 - fd) * (1.0 - fr) / denom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fd: f64,
    pub fr: f64,
    pub f: f64,
    pub n_hyp: usize,
    pub n_ref: usize,
    pub n_matched: usize,
    pub tolerance_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

impl EvalReport {
    /// Aligned two-column text table.
    pub fn to_table(&self) -> String {
        let mut rows = vec![
            ("FD", format!("{:.4}", self.fd)),
            ("FR", format!("{:.4}", self.fr)),
            ("F", format!("{:.4}", self.f)),
            ("hypotheses", self.n_hyp.to_string()),
            ("references", self.n_ref.to_string()),
            ("matched", self.n_matched.to_string()),
            ("tolerance_s", format!("{:.3}", self.tolerance_s)),
        ];
        if let Some(t) = self.wall_time_s {
            rows.push(("wall_time_s", format!("{t:.4}")));
        }
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<12} {v:>10}");
        }
        out
    }
}

pub fn evaluate(
    reference: &ChangePointSet,
    hypothesis: &ChangePointSet,
    tolerance_s: f64,
) -> EvalReport {
    let n_matched = match_points(reference, hypothesis, tolerance_s).n_matched();
    let fd = fd_rate(hypothesis.len(), n_matched);
    let fr = fr_rate(reference.len(), n_matched);
    EvalReport {
        fd,
        fr,
        f: f_measure(fd, fr),
        n_hyp: hypothesis.len(),
        n_ref: reference.len(),
        n_matched,
        tolerance_s,
        wall_time_s: None,
    }
}

/// Anything that turns audio into change points.
pub trait Segmenter {
    fn name(&self) -> String;
    fn segment(&self, buffer: &AudioBuffer) -> Result<ChangePointSet>;
}

/// Always returns no change points; a floor for comparisons.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoopSegmenter;

impl Segmenter for NoopSegmenter {
    fn name(&self) -> String {
        "noop".into()
    }

    fn segment(&self, _buffer: &AudioBuffer) -> Result<ChangePointSet> {
        Ok(ChangePointSet::empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub report: Option<EvalReport>,
    pub wall_time_s: f64,
    /// Baseline wall time divided by this row's wall time.
    pub speedup: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub baseline: Option<String>,
}

impl BenchTable {
    pub fn has_speedup(&self) -> bool {
        self.rows.len() >= 2
    }

    /// CSV with `method,fd,fr,f,wall_time_s` plus `speedup` when two or more methods ran.
    /// Failed methods leave the score columns empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,fd,fr,f,wall_time_s");
        if self.has_speedup() {
            out.push_str(",speedup");
        }
        out.push('\n');
        for row in &self.rows {
            match &row.report {
                Some(r) => {
                    let _ = write!(
                        out,
                        "{},{:.4},{:.4},{:.4},{:.6}",
                        row.method, r.fd, r.fr, r.f, row.wall_time_s
                    );
                }
                None => {
                    let _ = write!(out, "{},,,,{:.6}", row.method, row.wall_time_s);
                }
            }
            if self.has_speedup() {
                match row.speedup {
                    Some(s) => {
                        let _ = write!(out, ",{s:.3}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned human-readable summary.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>8} {:>8} {:>8} {:>12}",
            "method", "FD", "FR", "F", "wall_time_s"
        );
        if self.has_speedup() {
            let _ = write!(out, " {:>8}", "speedup");
        }
        out.push('\n');
        for row in &self.rows {
            match &row.report {
                Some(r) => {
                    let _ = write!(
                        out,
                        "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>12.4}",
                        row.method, r.fd, r.fr, r.f, row.wall_time_s
                    );
                }
                None => {
                    let _ = write!(
                        out,
                        "{:<12} {:>8} {:>8} {:>8} {:>12.4}",
                        row.method, "-", "-", "-", row.wall_time_s
                    );
                }
            }
            if self.has_speedup() {
                match row.speedup {
                    Some(s) => {
                        let _ = write!(out, " {s:>8.3}");
                    }
                    None => {
                        let _ = write!(out, " {:>8}", "-");
                    }
                }
            }
            if let Some(e) = &row.error {
                let _ = write!(out, "  error: {e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every method on the same buffer, one after another.
///
/// The speedup baseline is the method named `baseline` if present, otherwise
/// the first method. A failing method yields a row with `error` set.
pub fn benchmark(
    buffer: &AudioBuffer,
    reference: &ChangePointSet,
    methods: &[&dyn Segmenter],
    tolerance_s: f64,
    baseline: Option<&str>,
) -> Result<BenchTable> {
    if methods.is_empty() {
        return Err(Error::InvalidConfig(
            "benchmark needs at least one method".into(),
        ));
    }
    let mut rows = Vec::with_capacity(methods.len());
    for m in methods {
        let start = Instant::now();
        let outcome = m.segment(buffer);
        let wall = start.elapsed().as_secs_f64();
        let (report, error) = match outcome {
            Ok(hyp) => {
                let mut r = evaluate(reference, &hyp, tolerance_s);
                r.wall_time_s = Some(wall);
                (Some(r), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        rows.push(BenchRow {
            method: m.name(),
            report,
            wall_time_s: wall,
            speedup: None,
            error,
        });
    }
    let base_idx = baseline
        .and_then(|b| rows.iter().position(|r| r.method == b))
        .unwrap_or(0);
    let base_name = rows[base_idx].method.clone();
    if rows.len() >= 2 {
        let base_time = rows[base_idx].wall_time_s;
        for row in &mut rows {
            if row.error.is_none() && row.wall_time_s > 0.0 {
                row.speedup = Some(base_time / row.wall_time_s);
            }
        }
    }
    Ok(BenchTable {
        rows,
        baseline: Some(base_name),
    })
}
