//! Tree ensembles: random forest, one-vs-rest gradient boosting and
//! SAMME AdaBoost on depth-1 stumps.

use super::tree::{
    fit_classification, fit_regression, set_leaf_value, ClassFitOptions, Tree,
};
use crate::derive_seed;
use crate::mat::Mat;
use crate::parallel::{default_mode, map_indexed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub num_classes: usize,
}

/// Bootstrap-aggregated Gini trees with sqrt-feature subsampling per split.
pub fn fit_forest(
    x: &Mat,
    y: &[usize],
    num_classes: usize,
    n_trees: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> ForestModel {
    let n = x.rows();
    let m = (x.cols() as f64).sqrt().ceil() as usize;
    let trees = map_indexed(n_trees, default_mode(), |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("rf-tree-{t}")));
        let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        fit_classification(
            x,
            y,
            &sample,
            ClassFitOptions {
                num_classes,
                max_depth,
                weights: None,
                features_per_split: Some(m),
                rng: Some(&mut rng),
            },
        )
    });
    ForestModel { trees, num_classes }
}

impl ForestModel {
    /// Soft-vote logits: log of the mean leaf distribution.
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let rows = map_indexed(x.rows(), default_mode(), |q| {
            let row = x.row(q);
            let mut mean = vec![0.0; self.num_classes];
            for tree in &self.trees {
                for (z, p) in tree.predict_leaf(row).iter().enumerate() {
                    mean[z] += p;
                }
            }
            mean.iter()
                .map(|v| (v / self.trees.len() as f64).max(1e-12).ln())
                .collect()
        });
        Mat::from_rows(&rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Per-class constant score (prior log-odds).
    pub base: Vec<f64>,
    /// `trees[class][round]`.
    pub trees: Vec<Vec<Tree>>,
    pub shrinkage: f64,
}

/// One-vs-rest logistic gradient boosting on depth-limited regression
/// trees with Newton leaf values.
pub fn fit_gbdt(
    x: &Mat,
    y: &[usize],
    num_classes: usize,
    rounds: usize,
    depth: usize,
    shrinkage: f64,
) -> GbdtModel {
    let n = x.rows();
    let all: Vec<usize> = (0..n).collect();
    let per_class = map_indexed(num_classes, default_mode(), |z| {
        let targets: Vec<f64> = y.iter().map(|&c| if c == z { 1.0 } else { 0.0 }).collect();
        let pos = targets.iter().sum::<f64>().clamp(1e-12, n as f64 - 1e-12);
        let base = (pos / (n as f64 - pos)).ln();
        let mut scores = vec![base; n];
        let mut trees = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let probs: Vec<f64> = scores.iter().map(|s| sigmoid(*s)).collect();
            let residuals: Vec<f64> = targets
                .iter()
                .zip(&probs)
                .map(|(t, p)| t - p)
                .collect();
            let (mut tree, leaves) = fit_regression(x, &residuals, &all, depth, 1);
            for (node, members) in &leaves {
                let num: f64 = members.iter().map(|&i| residuals[i]).sum();
                let den: f64 = members.iter().map(|&i| probs[i] * (1.0 - probs[i])).sum();
                let gamma = (num / den.max(1e-12)).clamp(-10.0, 10.0);
                set_leaf_value(&mut tree, *node, gamma);
            }
            for (i, s) in scores.iter_mut().enumerate() {
                *s += shrinkage * tree.predict_leaf(x.row(i))[0];
            }
            trees.push(tree);
        }
        (base, trees)
    });
    let mut model = GbdtModel {
        base: Vec::new(),
        trees: Vec::new(),
        shrinkage,
    };
    for (base, trees) in per_class {
        model.base.push(base);
        model.trees.push(trees);
    }
    model
}

impl GbdtModel {
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let rows = map_indexed(x.rows(), default_mode(), |q| {
            let row = x.row(q);
            self.base
                .iter()
                .zip(&self.trees)
                .map(|(b, trees)| {
                    b + self.shrinkage
                        * trees.iter().map(|t| t.predict_leaf(row)[0]).sum::<f64>()
                })
                .collect()
        });
        Mat::from_rows(&rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stumps: Vec<(Tree, f64)>,
    pub num_classes: usize,
}

/// SAMME with depth-1 stumps. Rounds stop early if a stump is no better
/// than chance.
pub fn fit_adaboost(x: &Mat, y: &[usize], num_classes: usize, rounds: usize) -> AdaBoostModel {
    let n = x.rows();
    let all: Vec<usize> = (0..n).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    let chance = 1.0 - 1.0 / num_classes as f64;
    for _ in 0..rounds {
        let stump = fit_classification(
            x,
            y,
            &all,
            ClassFitOptions {
                num_classes,
                max_depth: Some(1),
                weights: Some(&weights),
                features_per_split: None,
                rng: None,
            },
        );
        let preds: Vec<usize> = (0..n).map(|i| argmax(stump.predict_leaf(x.row(i)))).collect();
        let err: f64 = weights
            .iter()
            .zip(&preds)
            .zip(y)
            .filter(|((_, p), t)| *p != *t)
            .map(|((w, _), _)| *w)
            .sum();
        if err >= chance {
            break;
        }
        let err = err.max(1e-10);
        let alpha = ((1.0 - err) / err).ln() + (num_classes as f64 - 1.0).ln();
        for (w, (p, t)) in weights.iter_mut().zip(preds.iter().zip(y)) {
            if *p != *t {
                *w *= alpha.exp();
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        let perfect = err <= 1e-9;
        stumps.push((stump, alpha));
        if perfect {
            break;
        }
    }
    AdaBoostModel { stumps, num_classes }
}

impl AdaBoostModel {
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let total_alpha: f64 = self.stumps.iter().map(|(_, a)| a).sum::<f64>().max(1e-12);
        let rows = map_indexed(x.rows(), default_mode(), |q| {
            let row = x.row(q);
            let mut scores = vec![0.0; self.num_classes];
            for (stump, alpha) in &self.stumps {
                scores[argmax(stump.predict_leaf(row))] += alpha;
            }
            scores.iter().map(|s| s / total_alpha).collect()
        });
        Mat::from_rows(&rows)
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate() {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_blobs(n_per: usize) -> (Mat, Vec<usize>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for z in 0..3usize {
            for i in 0..n_per {
                let jitter = ((i * 37 + z * 11) % 17) as f64 / 17.0 - 0.5;
                rows.push(vec![z as f64 * 5.0 + jitter, -(z as f64) * 3.0 + jitter * 0.5]);
                y.push(z);
            }
        }
        (Mat::from_rows(&rows), y)
    }

    #[test]
    fn forest_is_deterministic_and_accurate_on_blobs() {
        let (x, y) = three_blobs(20);
        let a = fit_forest(&x, &y, 3, 25, None, 7);
        let b = fit_forest(&x, &y, 3, 25, None, 7);
        assert_eq!(a, b);
        let logits = a.predict_logits(&x);
        let correct = (0..x.rows())
            .filter(|&i| argmax(logits.row(i)) == y[i])
            .count();
        assert_eq!(correct, x.rows());
    }

    #[test]
    fn gbdt_separates_blobs() {
        let (x, y) = three_blobs(15);
        let model = fit_gbdt(&x, &y, 3, 20, 3, 0.1);
        let logits = model.predict_logits(&x);
        let correct = (0..x.rows())
            .filter(|&i| argmax(logits.row(i)) == y[i])
            .count();
        assert_eq!(correct, x.rows());
    }

    #[test]
    fn adaboost_beats_chance_on_blobs() {
        let (x, y) = three_blobs(15);
        let model = fit_adaboost(&x, &y, 3, 50);
        assert!(!model.stumps.is_empty());
        let logits = model.predict_logits(&x);
        let correct = (0..x.rows())
            .filter(|&i| argmax(logits.row(i)) == y[i])
            .count();
        assert!(correct as f64 / x.rows() as f64 > 0.8);
    }
}
