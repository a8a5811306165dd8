//! Shared test oracles, independent of the production code paths they
//! check: central finite differences, a direct-convolution wavelet
//! transform, and a brute-force supervised contrastive loss.

#![allow(dead_code)]

use harlab_core::autodiff::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const FD_H: f64 = 1e-5;
/// Acceptance threshold for gradient checks.
pub const FD_TOLERANCE: f64 = 1e-4;

/// Relative error with a floor that keeps near-zero gradients meaningful.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-2)
}

/// Compares analytic gradients against central finite differences on up to
/// `samples` coordinates per tensor. Returns the max relative error.
pub fn finite_diff_check(
    params: &[Tensor],
    analytic: &[Option<Tensor>],
    loss_only: impl Fn(&[Tensor]) -> f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for (pi, p) in params.iter().enumerate() {
        let grad = match &analytic[pi] {
            Some(g) => g,
            None => continue,
        };
        let n = p.len();
        let coords: Vec<usize> = if n <= samples {
            (0..n).collect()
        } else {
            (0..samples).map(|_| rng.gen_range(0..n)).collect()
        };
        for &ci in &coords {
            let mut plus = params.to_vec();
            plus[pi].data_mut()[ci] += FD_H;
            let mut minus = params.to_vec();
            minus[pi].data_mut()[ci] -= FD_H;
            let fd = (loss_only(&plus) - loss_only(&minus)) / (2.0 * FD_H);
            let an = grad.data()[ci];
            worst = worst.max(rel_err(an, fd));
        }
    }
    worst
}

/// Direct double-loop Morlet transform with the wavelet evaluated inline:
/// `out[k][t] = |Σ_u x(u)·(1/√s)·conj(ψ((u-t)/s))|`, skipping
/// `|(u-t)/s| > 4`, with `ψ(x) = π^(-1/4)·exp(iω0x)·exp(-x²/2)`.
pub fn cwt_direct_oracle(signal: &[f64], scales: &[f64], omega0: f64) -> Vec<Vec<f64>> {
    let s_len = signal.len();
    let norm = std::f64::consts::PI.powf(-0.25);
    scales
        .iter()
        .map(|&scale| {
            (0..s_len)
                .map(|t| {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for (u, &x) in signal.iter().enumerate() {
                        let arg = (u as f64 - t as f64) / scale;
                        if arg.abs() > 4.0 {
                            continue;
                        }
                        let envelope = norm / scale.sqrt() * (-0.5 * arg * arg).exp();
                        re += x * envelope * (omega0 * arg).cos();
                        im += x * (-envelope) * (omega0 * arg).sin();
                    }
                    (re * re + im * im).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Relative Frobenius distance between two equally shaped matrices.
pub fn rel_frobenius(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    (num / den.max(1e-300)).sqrt()
}

/// Literal transcription of the supervised contrastive formula with naive
/// exponential sums: for each anchor `i` with positives `P(i)`,
/// `(-1/|P(i)|)·Σ_{p∈P(i)} ln(exp(e_i·e_p/τ) / Σ_{b≠i} exp(e_i·e_b/τ))`,
/// averaged over usable anchors.
pub fn supcon_bruteforce(embeddings: &[Vec<f64>], labels: &[usize], tau: f64) -> f64 {
    let b = embeddings.len();
    let dot = |i: usize, j: usize| -> f64 {
        embeddings[i]
            .iter()
            .zip(&embeddings[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    let mut total = 0.0;
    let mut anchors = 0usize;
    for i in 0..b {
        let positives: Vec<usize> = (0..b)
            .filter(|&j| j != i && labels[j] == labels[i])
            .collect();
        if positives.is_empty() {
            continue;
        }
        let denom: f64 = (0..b)
            .filter(|&j| j != i)
            .map(|j| (dot(i, j) / tau).exp())
            .sum();
        let mut term = 0.0;
        for &p in &positives {
            term += ((dot(i, p) / tau).exp() / denom).ln();
        }
        total += -term / positives.len() as f64;
        anchors += 1;
    }
    total / anchors as f64
}

/// Deterministic pseudo-random unit-norm embedding rows.
pub fn random_unit_rows(b: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| {
            let mut row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
            row.iter_mut().for_each(|v| *v /= norm);
            row
        })
        .collect()
}

/// Random orthogonal matrix via Gram-Schmidt on a random square matrix.
pub fn random_orthogonal(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for existing in &q {
            let proj: f64 = v.iter().zip(existing).map(|(a, b)| a * b).sum();
            for (vi, ei) in v.iter_mut().zip(existing) {
                *vi -= proj * ei;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            q.push(v);
        }
    }
    q
}
