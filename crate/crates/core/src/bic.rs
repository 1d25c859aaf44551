//! Gaussian window modelling and ΔBIC change detection.
//!
//! ΔBIC for a window `Z` of `n` rows split at `b` into `X = Z[..b]` and
//! `Y = Z[b..]`:
//!
//! ```text
//! ΔBIC(b) = n/2·ln|Σz| − b/2·ln|Σx| − (n−b)/2·ln|Σy| − λ/2·(d + d(d+1)/2)·ln n
//! ```
//!
//! Covariances are maximum-likelihood (divide by the row count) and are
//! regularized with `reg_epsilon·I` before the determinant. A positive value
//! favours two Gaussians, i.e. a change at `b`. Natural logarithms throughout.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const DEFAULT_REG_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicConfig {
    /// Penalty weight λ; zero reduces ΔBIC to the generalized likelihood ratio.
    pub lambda: f64,
    pub reg_epsilon: f64,
    /// Initial window size (rows) of the growing-window search.
    pub n_ini: usize,
    /// Growth step (rows).
    pub n_g: usize,
    /// Window size (rows) after which the growing window slides instead of growing.
    pub n_max: usize,
    /// Slide step (rows), shared by both detectors.
    pub n_s: usize,
    /// Window of the fixed-size detector in rows; `None` means one second of rows.
    pub fixed_window: Option<usize>,
}

impl Default for BicConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            reg_epsilon: DEFAULT_REG_EPSILON,
            n_ini: 100,
            n_g: 50,
            n_max: 600,
            n_s: 50,
            fixed_window: None,
        }
    }
}

impl BicConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(
                "lambda must be finite and >= 0".into(),
            ));
        }
        if !(self.reg_epsilon.is_finite() && self.reg_epsilon > 0.0) {
            return Err(Error::InvalidConfig("reg_epsilon must be > 0".into()));
        }
        if self.n_ini < 2 * (dim + 1) {
            return Err(Error::InvalidConfig(format!(
                "n_ini ({}) must be at least 2(d+1) = {}",
                self.n_ini,
                2 * (dim + 1)
            )));
        }
        if self.n_g == 0 || self.n_s == 0 {
            return Err(Error::InvalidConfig("n_g and n_s must be >= 1".into()));
        }
        if self.n_max <= self.n_ini {
            return Err(Error::InvalidConfig("n_max must exceed n_ini".into()));
        }
        Ok(())
    }

    /// Fixed-detector window in rows for features with the given row period.
    pub fn fixed_window_rows(&self, row_period_s: f64) -> usize {
        self.fixed_window.unwrap_or_else(|| {
            if row_period_s > 0.0 {
                (1.0 / row_period_s).round() as usize
            } else {
                0
            }
        })
    }
}

/// Mean, ML covariance and regularized log-determinant of a block of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub n: usize,
    pub mean: Vec<f64>,
    /// Row-major `d × d`, unregularized.
    pub cov: Vec<f64>,
    /// `ln |cov + reg_epsilon·I|`.
    pub log_det: f64,
}

/// A detected change: time of the first row after the split and the ΔBIC there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub time_s: f64,
    pub score: f64,
}

/// In-place Cholesky of a symmetric row-major matrix, returning `ln det`.
/// Pivots that round to non-positive values are clamped to `floor`.
fn cholesky_log_det(a: &mut [f64], d: usize, floor: f64) -> f64 {
    let mut log_det = 0.0;
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        let diag = diag.max(floor).sqrt();
        a[j * d + j] = diag;
        log_det += 2.0 * diag.ln();
        for i in j + 1..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = v / diag;
        }
    }
    log_det
}

fn regularized_log_det(cov: &[f64], d: usize, reg_epsilon: f64) -> f64 {
    let mut work = cov.to_vec();
    for i in 0..d {
        work[i * d + i] += reg_epsilon;
    }
    cholesky_log_det(&mut work, d, reg_epsilon * 1e-6)
}

/// Fits a Gaussian to a contiguous row-major block of `dim`-dimensional rows.
pub fn fit_gaussian(rows: &[f64], dim: usize, reg_epsilon: f64) -> Result<GaussianStats> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::InvalidConfig(
            "row block is not a whole number of rows".into(),
        ));
    }
    let n = rows.len() / dim;
    if n < dim + 1 {
        return Err(Error::TooFewRows {
            needed: dim + 1,
            got: n,
        });
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut mean = vec![0.0; dim];
    for row in rows.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; dim * dim];
    for row in rows.chunks_exact(dim) {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in i..dim {
                cov[i * dim + j] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] / n as f64;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }
    let log_det = regularized_log_det(&cov, dim, reg_epsilon);
    Ok(GaussianStats {
        n,
        mean,
        cov,
        log_det,
    })
}

/// Model-complexity penalty `λ/2·(d + d(d+1)/2)·ln n`.
pub fn penalty(dim: usize, n: usize, lambda: f64) -> f64 {
    let d = dim as f64;
    0.5 * lambda * (d + 0.5 * d * (d + 1.0)) * (n as f64).ln()
}

/// ΔBIC of a row-major block of `dim`-dimensional rows split before row `split`.
pub fn delta_bic(
    rows: &[f64],
    dim: usize,
    split: usize,
    lambda: f64,
    reg_epsilon: f64,
) -> Result<f64> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::InvalidConfig(
            "row block is not a whole number of rows".into(),
        ));
    }
    let n = rows.len() / dim;
    let min_side = dim + 1;
    if split < min_side || n < split + min_side {
        return Err(Error::InvalidSplit {
            split,
            rows: n,
            min_side,
        });
    }
    let z = fit_gaussian(rows, dim, reg_epsilon)?;
    let x = fit_gaussian(&rows[..split * dim], dim, reg_epsilon)?;
    let y = fit_gaussian(&rows[split * dim..], dim, reg_epsilon)?;
    Ok(0.5 * n as f64 * z.log_det
        - 0.5 * split as f64 * x.log_det
        - 0.5 * (n - split) as f64 * y.log_det
        - penalty(dim, n, lambda))
}

/// ΔBIC over `rows` of a feature matrix with `split` given as an absolute row index.
pub fn delta_bic_in(
    features: &FeatureMatrix,
    rows: Range<usize>,
    split: usize,
    lambda: f64,
    reg_epsilon: f64,
) -> Result<f64> {
    let d = features.dim();
    if rows.end > features.n_rows() || split < rows.start {
        return Err(Error::InvalidSplit {
            split,
            rows: rows.len(),
            min_side: d + 1,
        });
    }
    let block = &features.as_slice()[rows.start * d..rows.end * d];
    delta_bic(block, d, split - rows.start, lambda, reg_epsilon)
}

/// Prefix sums over a whole feature matrix so any window's covariance costs
/// `O(d²)` to form. Rows are centred on the global mean first to keep the
/// `E[xxᵀ] − μμᵀ` form well conditioned.
pub struct WindowScorer<'a> {
    features: &'a FeatureMatrix,
    dim: usize,
    reg_epsilon: f64,
    sum: Vec<f64>,
    outer: Vec<f64>,
    work: Vec<f64>,
}

impl<'a> WindowScorer<'a> {
    pub fn new(features: &'a FeatureMatrix, reg_epsilon: f64) -> Self {
        let d = features.dim();
        let n = features.n_rows();
        let mut centre = vec![0.0; d];
        for row in features.rows() {
            for (c, v) in centre.iter_mut().zip(row) {
                *c += v;
            }
        }
        if n > 0 {
            centre.iter_mut().for_each(|c| *c /= n as f64);
        }
        let mut sum = vec![0.0; (n + 1) * d];
        let mut outer = vec![0.0; (n + 1) * d * d];
        let mut x = vec![0.0; d];
        for (r, row) in features.rows().enumerate() {
            for k in 0..d {
                x[k] = row[k] - centre[k];
                sum[(r + 1) * d + k] = sum[r * d + k] + x[k];
            }
            let (prev, next) = outer.split_at_mut((r + 1) * d * d);
            let prev = &prev[r * d * d..];
            let next = &mut next[..d * d];
            for i in 0..d {
                for j in i..d {
                    next[i * d + j] = prev[i * d + j] + x[i] * x[j];
                }
            }
        }
        Self {
            features,
            dim: d,
            reg_epsilon,
            sum,
            outer,
            work: vec![0.0; d * d],
        }
    }

    pub fn features(&self) -> &FeatureMatrix {
        self.features
    }

    /// `ln |Σ + εI|` of rows `[a, b)`.
    pub fn log_det(&mut self, a: usize, b: usize) -> f64 {
        let d = self.dim;
        let n = (b - a) as f64;
        let s_a = &self.sum[a * d..(a + 1) * d];
        let s_b = &self.sum[b * d..(b + 1) * d];
        let q_a = &self.outer[a * d * d..(a + 1) * d * d];
        let q_b = &self.outer[b * d * d..(b + 1) * d * d];
        for i in 0..d {
            let mi = (s_b[i] - s_a[i]) / n;
            for j in i..d {
                let mj = (s_b[j] - s_a[j]) / n;
                let v = (q_b[i * d + j] - q_a[i * d + j]) / n - mi * mj;
                self.work[i * d + j] = v;
                self.work[j * d + i] = v;
            }
            self.work[i * d + i] += self.reg_epsilon;
        }
        cholesky_log_det(&mut self.work, d, self.reg_epsilon * 1e-6)
    }

    /// ΔBIC of rows `[a, c)` split at `b`, given `ln|Σz|` for the whole window.
    fn score_split(&mut self, a: usize, b: usize, c: usize, z_log_det: f64, pen: f64) -> f64 {
        let n = (c - a) as f64;
        let x = self.log_det(a, b);
        let y = self.log_det(b, c);
        0.5 * n * z_log_det - 0.5 * (b - a) as f64 * x - 0.5 * (c - b) as f64 * y - pen
    }

    pub fn delta_bic(&mut self, a: usize, b: usize, c: usize, lambda: f64) -> f64 {
        let z = self.log_det(a, c);
        let pen = penalty(self.dim, c - a, lambda);
        self.score_split(a, b, c, z, pen)
    }

    /// Best split of `[a, c)` over `splits`, ties resolved to the earliest split.
    pub fn best_split(
        &mut self,
        a: usize,
        c: usize,
        splits: Range<usize>,
        lambda: f64,
    ) -> Option<(usize, f64)> {
        if splits.is_empty() {
            return None;
        }
        let z = self.log_det(a, c);
        let pen = penalty(self.dim, c - a, lambda);
        let mut best: Option<(usize, f64)> = None;
        for b in splits {
            let s = self.score_split(a, b, c, z, pen);
            if best.is_none_or(|(_, v)| s > v) {
                best = Some((b, s));
            }
        }
        best
    }
}

/// Growing-window search: starts with `n_ini` rows, grows by `n_g` up to
/// `n_max`, then slides by `n_s`. When the best split of a window has positive
/// ΔBIC it is emitted and the search restarts there.
///
/// Emitted changes stay at least `n_ini` rows apart: a best split closer than
/// that to the previous change replaces it when it scores higher, otherwise
/// only splits beyond the spacing are considered.
pub fn detect_growing(features: &FeatureMatrix, cfg: &BicConfig) -> Result<Vec<ChangePoint>> {
    let d = features.dim();
    cfg.validate(d)?;
    let total = features.n_rows();
    if total < cfg.n_ini {
        return Ok(Vec::new());
    }
    let min_side = d + 1;
    let mut scorer = WindowScorer::new(features, cfg.reg_epsilon);
    let mut found: Vec<(usize, f64)> = Vec::new();
    let mut start = 0usize;
    let mut size = cfg.n_ini;

    loop {
        let end = (start + size).min(total);
        if end - start < cfg.n_ini {
            break;
        }
        let lo = start + min_side;
        let hi = end + 1 - min_side;
        let spaced_from = found.last().map_or(0, |&(row, _)| row + cfg.n_ini);

        let z = scorer.log_det(start, end);
        let pen = penalty(d, end - start, cfg.lambda);
        let mut best: Option<(usize, f64)> = None;
        let mut best_spaced: Option<(usize, f64)> = None;
        for b in lo..hi {
            let s = scorer.score_split(start, b, end, z, pen);
            if best.is_none_or(|(_, v)| s > v) {
                best = Some((b, s));
            }
            if b >= spaced_from && best_spaced.is_none_or(|(_, v)| s > v) {
                best_spaced = Some((b, s));
            }
        }

        let mut restart = None;
        if let (Some((b, s)), Some(last)) = (best, found.last_mut()) {
            if s > 0.0 && b < spaced_from && s > last.1 {
                *last = (b, s);
                restart = Some(b);
            }
        }
        if restart.is_none() {
            if let Some((b, s)) = best_spaced.filter(|&(_, s)| s > 0.0) {
                found.push((b, s));
                restart = Some(b);
            }
        }
        if let Some(b) = restart {
            start = b;
            size = cfg.n_ini;
            continue;
        }
        if end == total {
            break;
        }
        if size < cfg.n_max {
            size = (size + cfg.n_g).min(cfg.n_max);
        } else {
            start += cfg.n_s;
        }
    }
    Ok(found
        .into_iter()
        .map(|(row, score)| ChangePoint {
            time_s: features.times()[row],
            score,
        })
        .collect())
}

/// ΔBIC at the centre of a fixed window slid by `n_s` rows: `(time_s, score)` pairs.
pub fn fixed_score_curve(features: &FeatureMatrix, cfg: &BicConfig) -> Result<Vec<(f64, f64)>> {
    let d = features.dim();
    let w = cfg.fixed_window_rows(features.row_period_s());
    if cfg.n_s == 0 {
        return Err(Error::InvalidConfig("n_s must be >= 1".into()));
    }
    let total = features.n_rows();
    if w < 2 * (d + 1) || total < w {
        return Ok(Vec::new());
    }
    let mut scorer = WindowScorer::new(features, cfg.reg_epsilon);
    let mut curve = Vec::new();
    let mut p = 0;
    while p + w <= total {
        let split = p + w / 2;
        let s = scorer.delta_bic(p, split, p + w, cfg.lambda);
        curve.push((split, s));
        p += cfg.n_s;
    }
    Ok(curve
        .into_iter()
        .map(|(row, s)| (features.times()[row], s))
        .collect())
}

/// Fixed-size sliding window: local maxima of the positive part of the centre
/// ΔBIC curve, with non-maximum suppression over one window length.
pub fn detect_fixed(features: &FeatureMatrix, cfg: &BicConfig) -> Result<Vec<ChangePoint>> {
    let d = features.dim();
    if !(cfg.lambda.is_finite() && cfg.lambda >= 0.0) || cfg.reg_epsilon <= 0.0 {
        return Err(Error::InvalidConfig("invalid lambda or reg_epsilon".into()));
    }
    let w = cfg.fixed_window_rows(features.row_period_s());
    let total = features.n_rows();
    if w < 2 * (d + 1) || total < w {
        return Ok(Vec::new());
    }
    let mut scorer = WindowScorer::new(features, cfg.reg_epsilon);
    let mut curve: Vec<(usize, f64)> = Vec::new();
    let mut p = 0;
    while p + w <= total {
        let split = p + w / 2;
        curve.push((split, scorer.delta_bic(p, split, p + w, cfg.lambda)));
        p += cfg.n_s;
    }

    let mut peaks: Vec<(usize, f64)> = (0..curve.len())
        .filter(|&i| {
            let s = curve[i].1;
            let left = if i > 0 {
                curve[i - 1].1
            } else {
                f64::NEG_INFINITY
            };
            let right = curve.get(i + 1).map_or(f64::NEG_INFINITY, |c| c.1);
            s > 0.0 && s > left && s >= right
        })
        .map(|i| curve[i])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for (row, s) in peaks {
        if kept.iter().all(|&(k, _)| row.abs_diff(k) >= w) {
            kept.push((row, s));
        }
    }
    kept.sort_by_key(|&(row, _)| row);
    Ok(kept
        .into_iter()
        .map(|(row, score)| ChangePoint {
            time_s: features.times()[row],
            score,
        })
        .collect())
}

/// Outcome of a local ΔBIC check around a candidate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub accepted: bool,
    /// ΔBIC at the candidate; `-inf` when the window lacked rows on either side.
    pub score: f64,
}

/// Checks a candidate change at `t` using the rows within `t ± window_s/2`,
/// split at the row nearest `t`. Insufficient context is a rejection, not an error.
pub fn verify_change(
    features: &FeatureMatrix,
    t: f64,
    window_s: f64,
    lambda: f64,
    reg_epsilon: f64,
) -> Verification {
    let rejected = Verification {
        accepted: false,
        score: f64::NEG_INFINITY,
    };
    let times = features.times();
    if times.is_empty() || window_s.is_nan() || window_s <= 0.0 || !t.is_finite() {
        return rejected;
    }
    let half = 0.5 * window_s;
    let a = times.partition_point(|&x| x < t - half);
    let c = times.partition_point(|&x| x <= t + half);
    if c <= a {
        return rejected;
    }
    let nearest = (a..c)
        .min_by(|&i, &j| (times[i] - t).abs().total_cmp(&(times[j] - t).abs()))
        .expect("non-empty range");
    let min_side = features.dim() + 1;
    if nearest < a + min_side || c < nearest + min_side {
        return rejected;
    }
    match delta_bic_in(features, a..c, nearest, lambda, reg_epsilon) {
        Ok(score) => Verification {
            accepted: score > 0.0,
            score,
        },
        Err(_) => rejected,
    }
}
