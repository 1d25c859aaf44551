//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `n` rows of `N(mean·1, I_d)` from a fixed seed.
pub fn gaussian_rows(n: usize, d: usize, mean: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mean + z
                })
                .collect::<Vec<f64>>()
        })
        .collect()
}

fn ml_var(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Scalar ΔBIC written out term by term.
pub fn brute_delta_bic_1d(x: &[f64], b: usize, lambda: f64, eps: f64) -> f64 {
    let n = x.len() as f64;
    let ld = |s: &[f64]| (ml_var(s) + eps).ln();
    let pen = 0.5 * lambda * (1.0 + 1.0) * n.ln();
    0.5 * n * ld(x) - 0.5 * b as f64 * ld(&x[..b]) - 0.5 * (n - b as f64) * ld(&x[b..]) - pen
}

fn log_det_2d(x: &[[f64; 2]], eps: f64) -> f64 {
    let n = x.len() as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    for r in x {
        m0 += r[0];
        m1 += r[1];
    }
    m0 /= n;
    m1 /= n;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for r in x {
        a += (r[0] - m0) * (r[0] - m0);
        b += (r[0] - m0) * (r[1] - m1);
        c += (r[1] - m1) * (r[1] - m1);
    }
    let (a, b, c) = (a / n + eps, b / n, c / n + eps);
    (a * c - b * b).ln()
}

/// Two-dimensional ΔBIC with the 2×2 determinant expanded by hand.
pub fn brute_delta_bic_2d(x: &[[f64; 2]], b: usize, lambda: f64, eps: f64) -> f64 {
    let n = x.len() as f64;
    let pen = 0.5 * lambda * (2.0 + 3.0) * n.ln();
    0.5 * n * log_det_2d(x, eps)
        - 0.5 * b as f64 * log_det_2d(&x[..b], eps)
        - 0.5 * (n - b as f64) * log_det_2d(&x[b..], eps)
        - pen
}

/// Largest one-to-one matching within `tol`, by trying every assignment.
pub fn exhaustive_matches(reference: &[f64], hypothesis: &[f64], tol: f64) -> usize {
    fn go(r: &[f64], h: &[f64], used: &mut Vec<bool>, tol: f64) -> usize {
        let Some((&first, rest)) = r.split_first() else {
            return 0;
        };
        let mut best = go(rest, h, used, tol);
        for j in 0..h.len() {
            if !used[j] && (first - h[j]).abs() <= tol {
                used[j] = true;
                best = best.max(1 + go(rest, h, used, tol));
                used[j] = false;
            }
        }
        best
    }
    go(
        reference,
        hypothesis,
        &mut vec![false; hypothesis.len()],
        tol,
    )
}
