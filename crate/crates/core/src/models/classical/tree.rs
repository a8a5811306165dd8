//! CART trees stored as node arrays: weighted-Gini classification splits
//! and variance-reduction regression splits. Shared by the decision tree,
//! random forest, AdaBoost stumps and gradient-boosted rounds.

use crate::mat::Mat;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const NO_CHILD: usize = usize::MAX;
/// An improvement must beat the incumbent by this much; keeps the chosen
/// split independent of feature scan order.
const SPLIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Class distribution (classification) or single fitted value
    /// (regression); `None` on internal nodes.
    pub leaf: Option<Vec<f64>>,
}

/// A fitted tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            let node = &self.nodes[at];
            if node.leaf.is_some() {
                return at;
            }
            at = if row[node.feature] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }

    /// Class distribution or regression value stored at the reached leaf.
    pub fn predict_leaf(&self, row: &[f64]) -> &[f64] {
        let at = self.leaf_index(row);
        self.nodes[at].leaf.as_deref().expect("leaf node")
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at].leaf {
                Some(_) => 0,
                None => 1 + walk(nodes, nodes[at].left).max(walk(nodes, nodes[at].right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Options for classification tree growth.
pub struct ClassFitOptions<'a> {
    pub num_classes: usize,
    pub max_depth: Option<usize>,
    /// Per-sample weights; uniform when `None`.
    pub weights: Option<&'a [f64]>,
    /// Random feature subsampling per split (random forest); `None` uses
    /// every feature.
    pub features_per_split: Option<usize>,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

/// Grows a Gini classification tree over `x[indices]`.
pub fn fit_classification(
    x: &Mat,
    y: &[usize],
    indices: &[usize],
    mut opts: ClassFitOptions,
) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    grow_class(&mut tree, x, y, indices.to_vec(), 0, &mut opts);
    tree
}

fn class_distribution(y: &[usize], indices: &[usize], weights: Option<&[f64]>, z: usize) -> Vec<f64> {
    let mut dist = vec![0.0; z];
    for &i in indices {
        dist[y[i]] += weights.map_or(1.0, |w| w[i]);
    }
    let total: f64 = dist.iter().sum();
    if total > 0.0 {
        for d in dist.iter_mut() {
            *d /= total;
        }
    }
    dist
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

fn grow_class(
    tree: &mut Tree,
    x: &Mat,
    y: &[usize],
    indices: Vec<usize>,
    depth: usize,
    opts: &mut ClassFitOptions,
) -> usize {
    let node_id = tree.nodes.len();
    tree.nodes.push(TreeNode {
        feature: 0,
        threshold: 0.0,
        left: NO_CHILD,
        right: NO_CHILD,
        leaf: None,
    });
    let dist = class_distribution(y, &indices, opts.weights, opts.num_classes);
    let pure = dist.iter().any(|d| (*d - 1.0).abs() < 1e-15);
    let depth_capped = opts.max_depth.is_some_and(|d| depth >= d);
    if indices.len() < 2 || pure || depth_capped {
        tree.nodes[node_id].leaf = Some(dist);
        return node_id;
    }

    let feature_pool: Vec<usize> = match (opts.features_per_split, opts.rng.as_deref_mut()) {
        (Some(m), Some(rng)) => {
            let mut all: Vec<usize> = (0..x.cols()).collect();
            all.shuffle(rng);
            all.truncate(m.max(1).min(x.cols()));
            all.sort_unstable();
            all
        }
        _ => (0..x.cols()).collect(),
    };

    let mut best: Option<(f64, usize, f64)> = None; // (weighted impurity, feature, threshold)
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(indices.len());
    for &feature in &feature_pool {
        scratch.clear();
        scratch.extend(indices.iter().map(|&i| (x.get(i, feature), i)));
        scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut left_counts = vec![0.0; opts.num_classes];
        let mut right_counts = vec![0.0; opts.num_classes];
        let mut right_total = 0.0;
        for &(_, i) in scratch.iter() {
            let w = opts.weights.map_or(1.0, |ws| ws[i]);
            right_counts[y[i]] += w;
            right_total += w;
        }
        let mut left_total = 0.0;
        for w in 0..scratch.len() - 1 {
            let (v, i) = scratch[w];
            let wt = opts.weights.map_or(1.0, |ws| ws[i]);
            left_counts[y[i]] += wt;
            left_total += wt;
            right_counts[y[i]] -= wt;
            right_total -= wt;
            let next_v = scratch[w + 1].0;
            if next_v <= v {
                continue; // only split between distinct values
            }
            let total = left_total + right_total;
            let impurity = (left_total / total) * gini(&left_counts, left_total)
                + (right_total / total) * gini(&right_counts, right_total);
            if best.is_none() || impurity < best.unwrap().0 - SPLIT_TOLERANCE {
                best = Some((impurity, feature, 0.5 * (v + next_v)));
            }
        }
    }

    match best {
        None => {
            tree.nodes[node_id].leaf = Some(dist);
            node_id
        }
        Some((_, feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| x.get(i, feature) <= threshold);
            let left = grow_class(tree, x, y, left_idx, depth + 1, opts);
            let right = grow_class(tree, x, y, right_idx, depth + 1, opts);
            let node = &mut tree.nodes[node_id];
            node.feature = feature;
            node.threshold = threshold;
            node.left = left;
            node.right = right;
            node_id
        }
    }
}

/// Grows a variance-reduction regression tree on `targets` and returns it
/// together with each training index's leaf node (for leaf re-valuation by
/// the boosting loop).
pub fn fit_regression(
    x: &Mat,
    targets: &[f64],
    indices: &[usize],
    max_depth: usize,
    min_leaf: usize,
) -> (Tree, Vec<(usize, Vec<usize>)>) {
    let mut tree = Tree { nodes: Vec::new() };
    let mut leaves: Vec<(usize, Vec<usize>)> = Vec::new();
    grow_reg(
        &mut tree,
        x,
        targets,
        indices.to_vec(),
        0,
        max_depth,
        min_leaf,
        &mut leaves,
    );
    (tree, leaves)
}

#[allow(clippy::too_many_arguments)]
fn grow_reg(
    tree: &mut Tree,
    x: &Mat,
    targets: &[f64],
    indices: Vec<usize>,
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
    leaves: &mut Vec<(usize, Vec<usize>)>,
) -> usize {
    let node_id = tree.nodes.len();
    tree.nodes.push(TreeNode {
        feature: 0,
        threshold: 0.0,
        left: NO_CHILD,
        right: NO_CHILD,
        leaf: None,
    });
    let mean = indices.iter().map(|&i| targets[i]).sum::<f64>() / indices.len().max(1) as f64;
    if depth >= max_depth || indices.len() < 2 * min_leaf.max(1) {
        tree.nodes[node_id].leaf = Some(vec![mean]);
        leaves.push((node_id, indices));
        return node_id;
    }

    let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(indices.len());
    for feature in 0..x.cols() {
        scratch.clear();
        scratch.extend(indices.iter().map(|&i| (x.get(i, feature), i)));
        scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let total_sum: f64 = scratch.iter().map(|&(_, i)| targets[i]).sum();
        let total_sq: f64 = scratch.iter().map(|&(_, i)| targets[i] * targets[i]).sum();
        let n = scratch.len() as f64;
        let mut lsum = 0.0;
        let mut lsq = 0.0;
        for w in 0..scratch.len() - 1 {
            let (v, i) = scratch[w];
            lsum += targets[i];
            lsq += targets[i] * targets[i];
            let ln = (w + 1) as f64;
            let rn = n - ln;
            let next_v = scratch[w + 1].0;
            if next_v <= v || (w + 1) < min_leaf || (scratch.len() - w - 1) < min_leaf {
                continue;
            }
            let rsum = total_sum - lsum;
            let rsq = total_sq - lsq;
            let sse = (lsq - lsum * lsum / ln) + (rsq - rsum * rsum / rn);
            if best.is_none() || sse < best.unwrap().0 - SPLIT_TOLERANCE {
                best = Some((sse, feature, 0.5 * (v + next_v)));
            }
        }
    }

    match best {
        None => {
            tree.nodes[node_id].leaf = Some(vec![mean]);
            leaves.push((node_id, indices));
            node_id
        }
        Some((_, feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| x.get(i, feature) <= threshold);
            let left = grow_reg(tree, x, targets, left_idx, depth + 1, max_depth, min_leaf, leaves);
            let right =
                grow_reg(tree, x, targets, right_idx, depth + 1, max_depth, min_leaf, leaves);
            let node = &mut tree.nodes[node_id];
            node.feature = feature;
            node.threshold = threshold;
            node.left = left;
            node.right = right;
            node_id
        }
    }
}

/// Overwrites a leaf's fitted value (gradient boosting Newton step).
pub fn set_leaf_value(tree: &mut Tree, node: usize, value: f64) {
    tree.nodes[node].leaf = Some(vec![value]);
}
