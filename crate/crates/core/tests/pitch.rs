use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spkseg::pitch::{acf, amdf, cepstrum, pitch_frame, PitchDetector};
use spkseg::{pitch_track, AudioBuffer, Error, PitchConfig, PitchMethod};

const METHODS: [PitchMethod; 3] = [PitchMethod::Acf, PitchMethod::Amdf, PitchMethod::Cepstral];

fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
        .collect()
}

fn sawtooth(f: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * ((f * i as f64 / fs).fract()) - 1.0)
        .collect()
}

/// Band-limited pulse train: equal-amplitude cosine harmonics up to `fs/4`.
fn pulse_train(f: f64, fs: f64, n: usize) -> Vec<f64> {
    let k_max = (fs / 4.0 / f) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (1..=k_max)
                .map(|k| (2.0 * PI * k as f64 * f * t).cos())
                .sum::<f64>()
                / k_max as f64
        })
        .collect()
}

fn brute_acf(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut r = vec![0.0; n];
    for (tau, slot) in r.iter_mut().enumerate() {
        for i in 0..n - tau {
            *slot += s[i] * s[i + tau];
        }
    }
    r
}

fn brute_amdf(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut d = vec![0.0; n];
    for (tau, slot) in d.iter_mut().enumerate() {
        for i in 0..n - tau {
            *slot += (s[i] - s[i + tau]).abs();
        }
    }
    d
}

fn cfg(method: PitchMethod) -> PitchConfig {
    PitchConfig {
        method,
        ..PitchConfig::default()
    }
}

fn lag_of(method: PitchMethod, frame: &[f64], fs: u32) -> (usize, bool) {
    let mut det = PitchDetector::new(cfg(method), fs).unwrap();
    let est = det.estimate_lag(frame).unwrap();
    (est.lag, est.voiced)
}

#[test]
fn trivial_examples() {
    assert_eq!(
        acf(&[1.0, 1.0, 1.0, 1.0]).unwrap(),
        vec![4.0, 3.0, 2.0, 1.0]
    );
    assert!(acf(&[0.0; 16]).unwrap().iter().all(|&v| v == 0.0));
    let d = amdf(&[1.0, -1.0, 1.0, -1.0]).unwrap();
    assert_eq!(d[0], 0.0);
    assert_eq!(d[2], 0.0);
    assert!(cepstrum(&[0.0; 100]).unwrap().iter().all(|v| v.is_finite()));
    assert_eq!(cepstrum(&[0.5; 100]).unwrap().len(), 128);
    assert!(matches!(acf(&[]), Err(Error::EmptyFrame)));
    assert!(matches!(amdf(&[]), Err(Error::EmptyFrame)));
    assert!(matches!(cepstrum(&[]), Err(Error::EmptyFrame)));
}

#[test]
fn acf_and_amdf_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for len in [1usize, 2, 7, 8, 9, 63, 240] {
        let s: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (a, b) in acf(&s).unwrap().iter().zip(brute_acf(&s)) {
            assert!((a - b).abs() < 1e-9, "acf {a} vs {b}");
        }
        for (a, b) in amdf(&s).unwrap().iter().zip(brute_amdf(&s)) {
            assert!((a - b).abs() < 1e-9, "amdf {a} vs {b}");
        }
    }
}

#[test]
fn sine_200hz_lags_from_brute_force() {
    let s = sine(200.0, 8000.0, 400);
    let r = brute_acf(&s);
    let first_peak = (1..r.len() - 1)
        .find(|&t| r[t] > r[t - 1] && r[t] >= r[t + 1])
        .unwrap();
    assert!(first_peak.abs_diff(40) <= 1, "brute peak at {first_peak}");
    let module_r = acf(&s).unwrap();
    assert!(module_r[40] > module_r[39] && module_r[40] >= module_r[41]);

    let (lo, hi) = cfg(PitchMethod::Amdf).lag_range(8000);
    let d = amdf(&s).unwrap();
    let argmin = (lo..=hi).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    assert!(
        argmin.abs_diff(40) <= 1 || argmin % 40 <= 1,
        "amdf min at {argmin}"
    );
    let first_min = (lo..=hi)
        .find(|&t| d[t] <= d[t - 1] && d[t] <= d[t + 1])
        .unwrap();
    assert!(first_min.abs_diff(40) <= 1);
}

#[test]
fn sawtooth_cepstral_peak() {
    let s = sawtooth(200.0, 8000.0, 400);
    let c = cepstrum(&s).unwrap();
    let (lo, hi) = cfg(PitchMethod::Cepstral).lag_range(8000);
    let peak = (lo..=hi.min(c.len() - 1))
        .max_by(|&a, &b| c[a].total_cmp(&c[b]).then(b.cmp(&a)))
        .unwrap();
    assert!(peak.abs_diff(40) <= 1, "cepstral peak at {peak}");
}

#[test]
fn amdf_200hz_sine_pitch() {
    let s = sine(200.0, 8000.0, 240);
    let p = pitch_frame(&s, 8000, &cfg(PitchMethod::Amdf)).unwrap();
    assert!((195.1..=205.1).contains(&p), "{p}");
}

#[test]
fn silence_is_unvoiced() {
    for m in METHODS {
        assert_eq!(pitch_frame(&[0.0; 240], 8000, &cfg(m)).unwrap(), 0.0, "{m}");
    }
}

#[test]
fn short_frame_is_rejected() {
    for m in METHODS {
        let r = pitch_frame(&[0.1; 100], 8000, &cfg(m));
        assert!(matches!(r, Err(Error::FrameTooShort { .. })), "{m}: {r:?}");
    }
}

#[test]
fn pulse_train_methods_agree() {
    let s = pulse_train(120.0, 16000.0, 480);
    let lags: Vec<usize> = METHODS
        .iter()
        .map(|&m| {
            let (lag, voiced) = lag_of(m, &s, 16000);
            assert!(voiced, "{m} unvoiced");
            lag
        })
        .collect();
    for &l in &lags {
        assert!(l.abs_diff(133) <= 1, "lags {lags:?}");
    }
}

#[test]
fn noise_is_mostly_unvoiced() {
    let trials = 200;
    for m in METHODS {
        let mut det = PitchDetector::new(cfg(m), 8000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let unvoiced = (0..trials)
            .filter(|_| {
                let frame: Vec<f64> = (0..240).map(|_| rng.random_range(-0.5..0.5)).collect();
                !det.estimate_lag(&frame).unwrap().voiced
            })
            .count();
        assert!(
            unvoiced as f64 >= 0.95 * trials as f64,
            "{m}: {unvoiced}/{trials}"
        );
    }
}

#[test]
fn track_frame_count_and_values() {
    let buf = AudioBuffer::new(sine(150.0, 8000.0, 8000), 8000).unwrap();
    let track = pitch_track(&buf, &PitchConfig::default()).unwrap();
    assert_eq!(track.len(), 98);
    assert_eq!(track.times.len(), track.pitch_hz.len());
    for &p in &track.pitch_hz {
        assert!((8000.0 / 54.0..=8000.0 / 52.0).contains(&p), "{p}");
    }

    let silent = AudioBuffer::new(vec![0.0; 8000], 8000).unwrap();
    assert!(pitch_track(&silent, &PitchConfig::default())
        .unwrap()
        .pitch_hz
        .iter()
        .all(|&p| p == 0.0));

    let tiny = AudioBuffer::new(vec![0.0; 100], 8000).unwrap();
    assert!(matches!(
        pitch_track(&tiny, &PitchConfig::default()),
        Err(Error::AudioTooShort)
    ));
}

#[test]
fn two_tone_track_switches_at_boundary() {
    let mut s = sine(120.0, 8000.0, 4000);
    let hi = sine(240.0, 8000.0, 8000);
    s.extend_from_slice(&hi[4000..]);
    let buf = AudioBuffer::new(s, 8000).unwrap();
    let c = PitchConfig::default();
    let track = pitch_track(&buf, &c).unwrap();
    let within_bin = |p: f64, f: f64| {
        let lag = (8000.0 / f).round();
        p >= 8000.0 / (lag + 1.0) && p <= 8000.0 / (lag - 1.0)
    };
    let mut straddling = 0;
    for (i, &p) in track.pitch_hz.iter().enumerate() {
        let start = track.times[i];
        let end = start + track.frame_len_s;
        if end <= 0.5 + 1e-9 {
            assert!(within_bin(p, 120.0), "frame {i}: {p}");
        } else if start >= 0.5 - 1e-9 {
            assert!(within_bin(p, 240.0), "frame {i}: {p}");
        } else {
            straddling += 1;
        }
    }
    assert!(straddling <= 3);
}

#[test]
fn nonzero_pitch_stays_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s: Vec<f64> = (0..16000)
        .map(|i| 0.3 * (i as f64 * 0.05).sin() + rng.random_range(-0.2..0.2))
        .collect();
    let buf = AudioBuffer::new(s, 8000).unwrap();
    for m in METHODS {
        let c = cfg(m);
        let track = pitch_track(&buf, &c).unwrap();
        for &p in track.pitch_hz.iter().filter(|&&p| p != 0.0) {
            assert!(p >= c.min_hz && p <= c.max_hz, "{m}: {p}");
        }
    }
}

#[test]
fn track_is_deterministic() {
    let buf = AudioBuffer::new(pulse_train(130.0, 8000.0, 8000), 8000).unwrap();
    for m in METHODS {
        let a = pitch_track(&buf, &cfg(m)).unwrap();
        let b = pitch_track(&buf, &cfg(m)).unwrap();
        assert_eq!(a.to_tsv(), b.to_tsv());
    }
}

proptest! {
    #[test]
    fn acf_energy_and_amdf_nonneg(s in proptest::collection::vec(-1.0f64..1.0, 1..128)) {
        let r = acf(&s).unwrap();
        let energy: f64 = s.iter().map(|v| v * v).sum();
        prop_assert!((r[0] - energy).abs() <= 1e-9 * energy.max(1.0));
        for &v in &r {
            prop_assert!(v.abs() <= r[0] + 1e-9);
        }
        let d = amdf(&s).unwrap();
        prop_assert_eq!(d[0], 0.0);
        prop_assert!(d.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn lag_selection_is_scale_invariant(f in 70.0f64..380.0, phase in 0.0f64..std::f64::consts::TAU, c in prop_oneof![Just(0.5f64), Just(2.0), Just(0.25), Just(4.0)]) {
        let s: Vec<f64> = (0..240)
            .map(|i| {
                let t = i as f64 / 8000.0;
                0.4 * (2.0 * PI * f * t + phase).sin() + 0.2 * (4.0 * PI * f * t).sin()
            })
            .collect();
        let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
        for m in METHODS {
            prop_assert_eq!(lag_of(m, &s, 8000).0, lag_of(m, &scaled, 8000).0, "{}", m);
        }
    }
}
