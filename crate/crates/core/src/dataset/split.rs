//! Train / validation / test splits.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// The 70/10/20 protocol split.
pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.7, 0.1, 0.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Stratified over segments: per-class proportions match the targets to
    /// within the floor/remainder rounding (at most ±2 segments).
    SegmentStratified,
    /// Whole users assigned to one split each. Flagged in reports because
    /// overlapping windows leak across segment-level splits, which inflates
    /// segment-stratified scores.
    ByUser,
}

impl std::fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitStrategy::SegmentStratified => write!(f, "segment_stratified"),
            SplitStrategy::ByUser => write!(f, "by_user"),
        }
    }
}

/// Minimal view of a segment for splitting purposes.
#[derive(Debug, Clone, Copy)]
pub struct SplitItem {
    pub id: u64,
    pub class_index: usize,
    pub user_id: i64,
}

/// Disjoint id lists covering every input segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Allocates `n` into three parts: floors first, remainders to the largest
/// fractional parts (ties favor train, then val).
fn allocate(n: usize, ratios: (f64, f64, f64)) -> [usize; 3] {
    let targets = [ratios.0, ratios.1, ratios.2].map(|r| r * n as f64);
    let mut counts = targets.map(|t| t.floor() as usize);
    let mut rem = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if rem == 0 {
            break;
        }
        counts[i] += 1;
        rem -= 1;
    }
    counts
}

/// Deterministic stratified split of segments into train/val/test.
pub fn stratified_split(
    items: &[SplitItem],
    ratios: (f64, f64, f64),
    seed: u64,
    strategy: SplitStrategy,
    class_names: &[String],
) -> Result<SplitAssignment> {
    let sum = ratios.0 + ratios.1 + ratios.2;
    if !(ratios.0 > 0.0 && ratios.1 > 0.0 && ratios.2 > 0.0 && (sum - 1.0).abs() < 1e-9) {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        )));
    }
    let class_name = |z: usize| {
        class_names
            .get(z)
            .cloned()
            .unwrap_or_else(|| format!("class_{z}"))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, "split"));
    let mut assignment = SplitAssignment {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed,
        strategy,
    };

    match strategy {
        SplitStrategy::SegmentStratified => {
            let mut per_class: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
            for it in items {
                per_class.entry(it.class_index).or_default().push(it.id);
            }
            for (&z, ids) in per_class.iter() {
                if ids.len() < 10 {
                    return Err(Error::TooFewSegments {
                        class: class_name(z),
                        count: ids.len(),
                        min: 10,
                        strategy: strategy.to_string(),
                    });
                }
            }
            for (_, ids) in per_class.iter_mut() {
                ids.shuffle(&mut rng);
                let counts = allocate(ids.len(), ratios);
                assignment.train.extend(&ids[..counts[0]]);
                assignment.val.extend(&ids[counts[0]..counts[0] + counts[1]]);
                assignment.test.extend(&ids[counts[0] + counts[1]..]);
            }
        }
        SplitStrategy::ByUser => {
            let mut per_user: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
            for it in items {
                per_user.entry(it.user_id).or_default().push(it.id);
            }
            if per_user.len() < 3 {
                return Err(Error::Config(format!(
                    "by_user split needs at least 3 users, found {}",
                    per_user.len()
                )));
            }
            let mut users: Vec<i64> = per_user.keys().copied().collect();
            users.shuffle(&mut rng);
            let total = items.len() as f64;
            let targets = [ratios.0, ratios.1, ratios.2];
            let mut counts = [0usize; 3];
            let bucket_refs: [&mut Vec<u64>; 3] = [
                &mut assignment.train,
                &mut assignment.val,
                &mut assignment.test,
            ];
            for u in users {
                // Largest relative deficit takes the next user.
                let pick = (0..3)
                    .max_by(|&a, &b| {
                        let da = targets[a] - counts[a] as f64 / total;
                        let db = targets[b] - counts[b] as f64 / total;
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                let ids = &per_user[&u];
                counts[pick] += ids.len();
                bucket_refs[pick].extend(ids);
            }
        }
    }
    Ok(assignment)
}
