//! Cross-entropy, supervised contrastive and triplet losses.
//!
//! Each loss exists twice: a pure value form for reporting and oracle
//! tests, and a graph node (value plus hand-derived adjoints) for
//! training. Both share one computation.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::mat::Mat;

const PROB_FLOOR: f64 = 1e-12;

/// A scalar loss with its per-item terms; the scalar is always their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub scalar: f64,
    pub per_item: Vec<f64>,
    /// Contrastive anchors dropped for lack of an in-batch positive.
    pub excluded: usize,
}

impl LossValue {
    fn from_terms(per_item: Vec<f64>, excluded: usize) -> LossValue {
        let scalar = per_item.iter().sum::<f64>() / per_item.len().max(1) as f64;
        LossValue {
            scalar,
            per_item,
            excluded,
        }
    }
}

/// Mean negative log-probability of the true class, with probabilities
/// floored at 1e-12. Rows are expected to be softmax outputs.
pub fn ce_loss(probabilities: &Mat, labels: &[usize]) -> Result<LossValue> {
    assert_eq!(probabilities.rows(), labels.len(), "ce_loss batch mismatch");
    let z = probabilities.cols();
    let mut terms = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        if label >= z {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: z,
            });
        }
        terms.push(-probabilities.get(i, label).max(PROB_FLOOR).ln());
    }
    Ok(LossValue::from_terms(terms, 0))
}

/// Shared supervised-contrastive computation: loss terms plus `dL/dE`.
///
/// For anchor `i` with positives `P(i)` (same label, not `i`) the term is
/// `lse_i - mean_{p in P(i)} s_ip` with `s = E·Eᵀ/τ` and `lse_i` the
/// log-sum-exp over all non-anchor items. Anchors without positives are
/// excluded and counted.
fn supcon_core(
    emb: &[f64],
    b: usize,
    d: usize,
    labels: &[usize],
    tau: f64,
) -> Result<(LossValue, Vec<f64>)> {
    if tau <= 0.0 {
        return Err(Error::Config(format!("temperature {tau} must be positive")));
    }
    if b < 2 {
        return Err(Error::Config(format!(
            "contrastive batch needs at least 2 items, got {b}"
        )));
    }
    // similarity matrix s = E·Eᵀ/τ
    let mut sim = vec![0.0; b * b];
    for i in 0..b {
        for j in 0..b {
            let mut dot = 0.0;
            for k in 0..d {
                dot += emb[i * d + k] * emb[j * d + k];
            }
            sim[i * b + j] = dot / tau;
        }
    }
    let positives: Vec<Vec<usize>> = (0..b)
        .map(|i| {
            (0..b)
                .filter(|&j| j != i && labels[j] == labels[i])
                .collect()
        })
        .collect();
    let usable: Vec<usize> = (0..b).filter(|&i| !positives[i].is_empty()).collect();
    let excluded = b - usable.len();
    if usable.is_empty() {
        return Err(Error::NoAnchors);
    }

    // stable log-sum-exp over non-anchor items per anchor
    let mut lse = vec![0.0; b];
    for i in 0..b {
        let row = &sim[i * b..(i + 1) * b];
        let max = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| (v - max).exp())
            .sum();
        lse[i] = max + sum.ln();
    }

    let mut terms = Vec::with_capacity(usable.len());
    for &i in &usable {
        let mean_pos: f64 = positives[i]
            .iter()
            .map(|&p| sim[i * b + p])
            .sum::<f64>()
            / positives[i].len() as f64;
        terms.push(lse[i] - mean_pos);
    }
    let value = LossValue::from_terms(terms, excluded);

    // dL/ds then dL/dE = (G + Gᵀ)·E / τ
    let q = usable.len() as f64;
    let mut g = vec![0.0; b * b];
    for &i in &usable {
        let inv_p = 1.0 / positives[i].len() as f64;
        for j in 0..b {
            if j == i {
                continue;
            }
            let sigma = (sim[i * b + j] - lse[i]).exp();
            let pos = if labels[j] == labels[i] { inv_p } else { 0.0 };
            g[i * b + j] = (sigma - pos) / q;
        }
    }
    let mut grad = vec![0.0; b * d];
    for i in 0..b {
        for j in 0..b {
            let coeff = (g[i * b + j] + g[j * b + i]) / tau;
            if coeff == 0.0 {
                continue;
            }
            for k in 0..d {
                grad[i * d + k] += coeff * emb[j * d + k];
            }
        }
    }
    Ok((value, grad))
}

/// Pure supervised contrastive loss over L2-normalized embedding rows.
pub fn supcon_loss(embeddings: &Mat, labels: &[usize], tau: f64) -> Result<LossValue> {
    assert_eq!(embeddings.rows(), labels.len(), "supcon batch mismatch");
    let (value, _) = supcon_core(
        embeddings.data(),
        embeddings.rows(),
        embeddings.cols(),
        labels,
        tau,
    )?;
    Ok(value)
}

/// Graph node for the supervised contrastive loss. `emb` must already be
/// row-normalized (compose with `l2_normalize_rows`).
pub fn supcon_node(g: &mut Graph, emb: Var, labels: &[usize], tau: f64) -> Result<Var> {
    let t = g.value(emb);
    let shape = t.shape().to_vec();
    assert_eq!(shape.len(), 2, "supcon expects [B,D] embeddings");
    let (value, grad) = supcon_core(t.data(), shape[0], shape[1], labels, tau)?;
    Ok(g.scalar_fused(value.scalar, vec![(emb, grad)]))
}

/// Shared triplet computation: hinge terms plus adjoints for the three
/// embedding matrices.
#[allow(clippy::type_complexity)]
fn triplet_core(
    a: &[f64],
    p: &[f64],
    n: &[f64],
    b: usize,
    d: usize,
    margin: f64,
) -> (LossValue, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut terms = Vec::with_capacity(b);
    let mut da = vec![0.0; b * d];
    let mut dp = vec![0.0; b * d];
    let mut dn = vec![0.0; b * d];
    for i in 0..b {
        let (ai, pi, ni) = (&a[i * d..(i + 1) * d], &p[i * d..(i + 1) * d], &n[i * d..(i + 1) * d]);
        let dap = dist(ai, pi);
        let dan = dist(ai, ni);
        let term = (dap - dan + margin).max(0.0);
        terms.push(term);
        if term > 0.0 {
            let w = 1.0 / b as f64;
            if dap > 0.0 {
                for k in 0..d {
                    let g = w * (ai[k] - pi[k]) / dap;
                    da[i * d + k] += g;
                    dp[i * d + k] -= g;
                }
            }
            if dan > 0.0 {
                for k in 0..d {
                    let g = w * (ai[k] - ni[k]) / dan;
                    da[i * d + k] -= g;
                    dn[i * d + k] += g;
                }
            }
        }
    }
    (LossValue::from_terms(terms, 0), da, dp, dn)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pure triplet loss: mean of `max(d(a,p) - d(a,n) + m, 0)` per row.
pub fn triplet_loss(anchor: &Mat, positive: &Mat, negative: &Mat, margin: f64) -> LossValue {
    assert_eq!(anchor.rows(), positive.rows());
    assert_eq!(anchor.rows(), negative.rows());
    assert_eq!(anchor.cols(), positive.cols());
    assert_eq!(anchor.cols(), negative.cols());
    let (value, _, _, _) = triplet_core(
        anchor.data(),
        positive.data(),
        negative.data(),
        anchor.rows(),
        anchor.cols(),
        margin,
    );
    value
}

/// Graph node for the triplet loss over three equally shaped `[B,D]`
/// embedding batches.
pub fn triplet_node(g: &mut Graph, anchor: Var, positive: Var, negative: Var, margin: f64) -> Var {
    let shape = g.value(anchor).shape().to_vec();
    assert_eq!(shape.len(), 2, "triplet expects [B,D] embeddings");
    assert_eq!(g.value(positive).shape(), &shape[..], "triplet shape mismatch");
    assert_eq!(g.value(negative).shape(), &shape[..], "triplet shape mismatch");
    let (value, da, dp, dn) = triplet_core(
        g.value(anchor).data(),
        g.value(positive).data(),
        g.value(negative).data(),
        shape[0],
        shape[1],
        margin,
    );
    g.scalar_fused(
        value.scalar,
        vec![(anchor, da), (positive, dp), (negative, dn)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_prediction_costs_ln6() {
        let probs = Mat::from_rows(&[vec![1.0 / 6.0; 6], vec![1.0 / 6.0; 6]]);
        let loss = ce_loss(&probs, &[0, 5]).unwrap();
        assert!((loss.scalar - 6.0f64.ln()).abs() < 1e-12);
        assert_eq!(loss.per_item.len(), 2);
    }

    #[test]
    fn perfect_and_partial_predictions() {
        let mut perfect = vec![0.0; 6];
        perfect[2] = 1.0;
        let loss = ce_loss(&Mat::from_rows(&[perfect]), &[2]).unwrap();
        assert!(loss.scalar.abs() < 1e-12);
        let mut partial = vec![0.06; 6];
        partial[1] = 0.7;
        let loss = ce_loss(&Mat::from_rows(&[partial]), &[1]).unwrap();
        assert!((loss.scalar - (-0.7f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn ce_rejects_out_of_range_labels() {
        let probs = Mat::from_rows(&[vec![0.5, 0.5]]);
        assert!(matches!(
            ce_loss(&probs, &[2]),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
    }

    #[test]
    fn identical_positive_pair_has_zero_supcon_loss() {
        // B = 2, same label, identical embeddings: numerator equals the
        // denominator, so the log term vanishes.
        let e = Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let loss = supcon_loss(&e, &[3, 3], 0.07).unwrap();
        assert!(loss.scalar.abs() < 1e-12, "loss {}", loss.scalar);
        assert_eq!(loss.excluded, 0);
    }

    #[test]
    fn supcon_is_nonnegative_on_random_batches() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let b = rng.gen_range(4..12);
            let d = rng.gen_range(2..6);
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for i in 0..b {
                let mut row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                row.iter_mut().for_each(|v| *v /= norm);
                rows.push(row);
                labels.push(i % 2);
            }
            let loss = supcon_loss(&Mat::from_rows(&rows), &labels, 0.07).unwrap();
            assert!(loss.scalar >= -1e-12, "negative supcon loss {}", loss.scalar);
        }
    }

    #[test]
    fn anchors_without_positives_are_excluded_and_all_excluded_is_fatal() {
        let e = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]);
        // one pair shares a label, the third is alone
        let loss = supcon_loss(&e, &[0, 0, 1], 0.5).unwrap();
        assert_eq!(loss.excluded, 1);
        assert_eq!(loss.per_item.len(), 2);
        // every item alone
        assert!(matches!(
            supcon_loss(&e, &[0, 1, 2], 0.5),
            Err(Error::NoAnchors)
        ));
    }

    #[test]
    fn triplet_hinge_cases_are_exact() {
        // d(a,p)=0, d(a,n)=2, m=1 -> 0
        let a = Mat::from_rows(&[vec![0.0, 0.0]]);
        let p = Mat::from_rows(&[vec![0.0, 0.0]]);
        let n = Mat::from_rows(&[vec![2.0, 0.0]]);
        assert_eq!(triplet_loss(&a, &p, &n, 1.0).scalar, 0.0);
        // d(a,p)=1, d(a,n)=0.5, m=0.2 -> 0.7
        let p = Mat::from_rows(&[vec![1.0, 0.0]]);
        let n = Mat::from_rows(&[vec![0.5, 0.0]]);
        let loss = triplet_loss(&a, &p, &n, 0.2);
        assert!((loss.scalar - 0.7).abs() < 1e-15);
        // a = p = n -> m
        let same = Mat::from_rows(&[vec![0.3, -0.4]]);
        assert_eq!(triplet_loss(&same, &same, &same, 0.9).scalar, 0.9);
    }

    #[test]
    fn scalar_is_mean_of_terms() {
        let a = Mat::from_rows(&[vec![0.0], vec![0.0]]);
        let p = Mat::from_rows(&[vec![1.0], vec![0.0]]);
        let n = Mat::from_rows(&[vec![0.0], vec![5.0]]);
        let loss = triplet_loss(&a, &p, &n, 1.0);
        let mean = loss.per_item.iter().sum::<f64>() / loss.per_item.len() as f64;
        assert_eq!(loss.scalar, mean);
        assert_eq!(loss.per_item, vec![2.0, 0.0]);
    }
}
