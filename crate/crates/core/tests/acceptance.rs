//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured value and the pinned tolerance, then asserts.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1`
//! to see the lines in order.

mod common;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{brute_delta_bic_1d, brute_delta_bic_2d, exhaustive_matches, gaussian_rows};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spkseg::bic::{delta_bic, penalty, WindowScorer, DEFAULT_REG_EPSILON};
use spkseg::eval::match_points;
use spkseg::pipeline::{run, Method};
use spkseg::pitch::PitchDetector;
use spkseg::pitch_seg::segment;
use spkseg::{
    evaluate, f_measure, load_wav, AudioBuffer, BicConfig, ChangePointSet, FeatureMatrix,
    PitchConfig, PitchMethod, PitchSegConfig,
};

fn report(id: &str, pass: bool, detail: &str) {
    println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
}

fn finish(id: &str, pass: bool, detail: String, elapsed: Duration, budget_s: f64) {
    let in_time = elapsed.as_secs_f64() < budget_s;
    let detail = format!(
        "{detail}; runtime {:.2} s (budget {budget_s} s)",
        elapsed.as_secs_f64()
    );
    report(id, pass && in_time, &detail);
    assert!(pass && in_time, "criterion {id} failed: {detail}");
}

#[test]
fn criterion_1_f_measure_reproduction() {
    let start = Instant::now();
    let rows = [
        (0.4207, 0.0126, 0.7302),
        (0.4287, 0.0063, 0.7255),
        (0.3888, 0.0, 0.7587),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (fd, fr, want) in rows {
        let f = f_measure(fd, fr);
        pass &= (f - want).abs() <= 0.0005;
        parts.push(format!("F({fd},{fr})={f:.5} vs {want}"));
    }
    finish(
        "1",
        pass,
        format!("{} (tol 0.0005)", parts.join(", ")),
        start.elapsed(),
        1.0,
    );
}

#[test]
fn criterion_2a_pure_tone_pitch() {
    let start = Instant::now();
    let methods = [PitchMethod::Acf, PitchMethod::Amdf, PitchMethod::Cepstral];
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut disagreements = 0;
    for fs in [8000u32, 16000] {
        for f in [80.0, 120.0, 150.0, 200.0, 300.0] {
            let want = (fs as f64 / f).round() as usize;
            let n = fs as usize / 4;
            let tone: Vec<f64> = (0..n)
                .map(|i| 0.5 * (2.0 * PI * f * i as f64 / fs as f64).sin())
                .collect();
            let mut per_method = Vec::new();
            for m in methods {
                let cfg = PitchConfig {
                    method: m,
                    ..PitchConfig::default()
                };
                let plan = cfg.frame_plan(fs).unwrap();
                let mut det = PitchDetector::new(cfg, fs).unwrap();
                let lags: Vec<Option<usize>> = (0..plan.frame_count(n))
                    .map(|k| {
                        let frame = &tone[k * plan.hop..k * plan.hop + plan.window_len];
                        let est = det.estimate_lag(frame).unwrap();
                        est.voiced.then_some(est.lag)
                    })
                    .collect();
                checked += lags.len();
                let bad = lags
                    .iter()
                    .filter(|l| l.is_none_or(|l| l.abs_diff(want) > 1))
                    .count();
                if bad > 0 {
                    failures.push(format!(
                        "{m} {f} Hz @ {fs}: {bad}/{} frames off (lag {:?}, want {want})",
                        lags.len(),
                        lags[0]
                    ));
                }
                per_method.push(lags);
            }
            for a in 0..methods.len() {
                for b in a + 1..methods.len() {
                    let split = per_method[a]
                        .iter()
                        .zip(&per_method[b])
                        .filter(
                            |(x, y)| !matches!((x, y), (Some(x), Some(y)) if x.abs_diff(*y) <= 1),
                        )
                        .count();
                    if split > 0 {
                        disagreements += 1;
                    }
                }
            }
        }
    }
    let pass = failures.is_empty() && disagreements == 0;
    let detail = format!(
        "{checked} frame estimates, tol one lag bin; {} detector/tone cases off{}{}; {disagreements} of 30 detector pairs disagree",
        failures.len(),
        if failures.is_empty() { "" } else { ": " },
        failures.join("; ")
    );
    finish("2a", pass, detail, start.elapsed(), 5.0);
}

#[test]
fn criterion_2b_delta_bic_exactness() {
    let start = Instant::now();
    let eps = DEFAULT_REG_EPSILON;
    let (d, half) = (4, 50);
    let x = gaussian_rows(half, d, 0.0, 77).concat();
    let mut z = x.clone();
    z.extend_from_slice(&x);
    let lambda = 1.2;
    let copied = delta_bic(&z, d, half, lambda, eps).unwrap();
    let copied_err = (copied + penalty(d, 2 * half, lambda)).abs();

    let glr = delta_bic(&z, d, half, 0.0, eps).unwrap();
    let zero_pen = penalty(d, 2 * half, 0.0) == 0.0 && glr.abs() < 1e-9;

    let mut y = gaussian_rows(60, d, -1.0, 78).concat();
    y.extend(gaussian_rows(60, d, 1.5, 79).concat());
    let base = delta_bic(&y, d, 60, 1.0, eps).unwrap();
    let with_pen = delta_bic(&y, d, 60, 0.0, eps).unwrap();
    let glr_err = (with_pen - base - penalty(d, 120, 1.0)).abs();
    let mut invariance_err: f64 = 0.0;
    for (c, shift) in [(0.01, -3.0), (3.0, 0.5), (250.0, 40.0)] {
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let s = delta_bic(&scaled, d, 60, 1.0, eps * c * c).unwrap();
        let moved: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let t = delta_bic(&moved, d, 60, 1.0, eps).unwrap();
        invariance_err = invariance_err.max((s - base).abs()).max((t - base).abs());
    }
    let pass = copied_err <= 1e-9 && zero_pen && glr_err <= 1e-9 && invariance_err <= 1e-6;
    finish(
        "2b",
        pass,
        format!(
            "|copy + penalty| = {copied_err:.2e} (tol 1e-9), lambda=0 GLR gap {glr_err:.2e} (tol 1e-9), \
             scale/translation drift {invariance_err:.2e} (tol 1e-6)"
        ),
        start.elapsed(),
        5.0,
    );
}

#[test]
fn criterion_2c_brute_force_delta_bic() {
    let start = Instant::now();
    let eps = DEFAULT_REG_EPSILON;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for inst in 0..20u64 {
        let d = 1 + (inst % 2) as usize;
        let n = rng.random_range(12..160);
        let b = rng.random_range(d + 1..n - d);
        let lambda = rng.random_range(0.0..2.0);
        let shift = rng.random_range(-3.0..3.0);
        let mut rows = gaussian_rows(b, d, 0.0, 1000 + inst);
        rows.extend(gaussian_rows(n - b, d, shift, 2000 + inst));
        let flat = rows.concat();
        let want = if d == 1 {
            brute_delta_bic_1d(&flat, b, lambda, eps)
        } else {
            let pairs: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
            brute_delta_bic_2d(&pairs, b, lambda, eps)
        };
        let direct = delta_bic(&flat, d, b, lambda, eps).unwrap();
        let fm = FeatureMatrix::from_rows(&rows, 0.01).unwrap();
        let fast = WindowScorer::new(&fm, eps).delta_bic(0, b, n, lambda);
        worst = worst.max((direct - want).abs()).max((fast - want).abs());
    }
    finish(
        "2c",
        worst <= 1e-8,
        format!("20 instances (d=1,2), max |module - brute force| = {worst:.2e} (tol 1e-8)"),
        start.elapsed(),
        5.0,
    );
}

#[test]
fn criterion_2d_matching_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0;
    for _ in 0..50 {
        let draw = |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(0..=8);
            let mut v: Vec<f64> = (0..k)
                .map(|_| (rng.random_range(0..400) as f64) * 0.025)
                .collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let r = draw(&mut rng);
        let h = draw(&mut rng);
        let tol = rng.random_range(0.05..1.0);
        let got = match_points(
            &ChangePointSet::new(r.clone()).unwrap(),
            &ChangePointSet::new(h.clone()).unwrap(),
            tol,
        )
        .n_matched();
        if got != exhaustive_matches(&r, &h, tol) {
            mismatches += 1;
        }
    }
    finish(
        "2d",
        mismatches == 0,
        format!("{mismatches}/50 instances differ from the exhaustive maximum matching"),
        start.elapsed(),
        5.0,
    );
}

/// Criterion-3 input produced by the `synth` command: (audio, truth).
fn six_speakers() -> &'static (AudioBuffer, ChangePointSet) {
    static INPUT: OnceLock<(AudioBuffer, ChangePointSet)> = OnceLock::new();
    INPUT.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("spkseg-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let wav: PathBuf = dir.join("six.wav");
        let status = Command::new(env!("CARGO_BIN_EXE_spkseg"))
            .args([
                "synth",
                "--speakers",
                "6",
                "--durations",
                "5",
                "--seed",
                "42",
                "--noise",
                "0.01",
                "--out",
            ])
            .arg(&wav)
            .status()
            .unwrap();
        assert!(status.success());
        let audio = load_wav(&wav).unwrap();
        let truth =
            ChangePointSet::parse(&std::fs::read_to_string(wav.with_extension("txt")).unwrap())
                .unwrap();
        let _ = std::fs::remove_dir_all(&dir);
        (audio, truth)
    })
}

#[test]
fn criterion_3_end_to_end_segmentation() {
    let start = Instant::now();
    let (audio, truth) = six_speakers();
    let mut pass = truth.len() == 5;
    let mut parts = Vec::new();
    for method in [Method::Pitch, Method::BicGrow] {
        let r = run(
            audio,
            method,
            &PitchSegConfig::default(),
            &BicConfig::default(),
        )
        .unwrap();
        let rep = evaluate(truth, &r.change_points, 0.3);
        let distinct = rep.n_matched == rep.n_hyp;
        pass &= rep.f >= 0.8 && distinct;
        parts.push(format!(
            "{method}: F={:.3} FD={:.3} FR={:.3} ({} of {} detections on distinct boundaries)",
            rep.f, rep.fd, rep.fr, rep.n_matched, rep.n_hyp
        ));
    }
    finish(
        "3",
        pass,
        format!(
            "{} (need F >= 0.8, all detections matched, tol 0.3 s)",
            parts.join("; ")
        ),
        start.elapsed(),
        60.0,
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_4_relative_speed() {
    let start = Instant::now();
    let (audio, _) = six_speakers();
    let seg = PitchSegConfig::default();
    assert_eq!((seg.mfcc.window_len, seg.mfcc.overlap), (200, 120));
    let time = |method: Method| {
        let t = Instant::now();
        run(audio, method, &seg, &BicConfig::default()).unwrap();
        t.elapsed().as_secs_f64()
    };
    let mut pitch = Vec::new();
    let mut grow = Vec::new();
    for _ in 0..3 {
        grow.push(time(Method::BicGrow));
        pitch.push(time(Method::Pitch));
    }
    let (p, g) = (median(pitch), median(grow));
    let speedup = g / p;
    finish(
        "4",
        speedup >= 1.5,
        format!(
            "median pitch {p:.4} s, median bic-grow {g:.4} s, speedup {speedup:.2} (need >= 1.5)"
        ),
        start.elapsed(),
        120.0,
    );
}

#[test]
fn criterion_5_parameter_sweeps() {
    let start = Instant::now();
    let (audio, _) = six_speakers();
    let examined = |cfg: PitchSegConfig| segment(audio, &cfg).unwrap().candidates_examined;
    let by_coef: Vec<usize> = [0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&c| {
            examined(PitchSegConfig {
                threshold_coef: c,
                ..PitchSegConfig::default()
            })
        })
        .collect();
    let by_gamma: Vec<usize> = [0.2, 0.3, 0.5, 1.0]
        .iter()
        .map(|&g| {
            examined(PitchSegConfig {
                gamma: g,
                ..PitchSegConfig::default()
            })
        })
        .collect();
    let monotone = by_coef.windows(2).all(|w| w[1] <= w[0]);
    let lifted = by_gamma[1] >= by_gamma[3];
    finish(
        "5",
        monotone && lifted,
        format!(
            "candidates vs threshold_coef {{0.3,0.5,0.7,0.9}} = {by_coef:?} (non-increasing: {monotone}); \
             vs gamma {{0.2,0.3,0.5,1.0}} = {by_gamma:?} (gamma 0.3 >= gamma 1.0: {lifted})"
        ),
        start.elapsed(),
        120.0,
    );
}
