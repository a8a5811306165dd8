//! Batch samplers: shuffled, class-balanced (guarantees in-batch
//! positives for the contrastive loss) and random label-constrained
//! triplets.

use crate::derive_seed;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    Plain,
    ClassBalanced,
    Triplet,
}

impl std::fmt::Display for BatchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BatchMode::Plain => write!(f, "plain"),
            BatchMode::ClassBalanced => write!(f, "class_balanced"),
            BatchMode::Triplet => write!(f, "triplet"),
        }
    }
}

/// One epoch's batches of item indices or (anchor, positive, negative)
/// index triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Batches {
    Plain(Vec<Vec<usize>>),
    Triplets(Vec<Vec<(usize, usize, usize)>>),
}

/// Deterministic batches for `(seed, epoch)` over items with the given
/// labels.
pub fn sample_batches(
    labels: &[usize],
    mode: BatchMode,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<Batches> {
    assert!(batch_size >= 1, "batch size must be positive");
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("batches-{mode}-{epoch}")));
    match mode {
        BatchMode::Plain => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            Ok(Batches::Plain(
                order.chunks(batch_size).map(<[usize]>::to_vec).collect(),
            ))
        }
        BatchMode::ClassBalanced => {
            let mut per_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &l) in labels.iter().enumerate() {
                per_class.entry(l).or_default().push(i);
            }
            let z = per_class.len();
            let quota = batch_size / z;
            if quota < 1 {
                return Err(Error::InfeasibleSampler {
                    mode: mode.to_string(),
                    why: format!("batch size {batch_size} below one item per class ({z} classes)"),
                });
            }
            let mut pools: Vec<Vec<usize>> = per_class.into_values().collect();
            for p in pools.iter_mut() {
                p.shuffle(&mut rng);
            }
            let mut cursors = vec![0usize; z];
            let num_batches = n.div_ceil(quota * z).max(1);
            let mut out = Vec::with_capacity(num_batches);
            for _ in 0..num_batches {
                let mut batch = Vec::with_capacity(quota * z);
                for (pool, cursor) in pools.iter_mut().zip(cursors.iter_mut()) {
                    for _ in 0..quota {
                        if *cursor >= pool.len() {
                            pool.shuffle(&mut rng);
                            *cursor = 0;
                        }
                        batch.push(pool[*cursor]);
                        *cursor += 1;
                    }
                }
                out.push(batch);
            }
            Ok(Batches::Plain(out))
        }
        BatchMode::Triplet => {
            let mut per_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &l) in labels.iter().enumerate() {
                per_class.entry(l).or_default().push(i);
            }
            let anchor_pool: Vec<usize> = per_class
                .values()
                .filter(|v| v.len() >= 2)
                .flat_map(|v| v.iter().copied())
                .collect();
            let classes_with_pairs = per_class.values().filter(|v| v.len() >= 2).count();
            if per_class.len() < 2 || classes_with_pairs == 0 {
                return Err(Error::InfeasibleSampler {
                    mode: mode.to_string(),
                    why: "need at least 2 classes and one class with 2 items".into(),
                });
            }
            let mut triples = Vec::with_capacity(n);
            for _ in 0..n {
                let a = anchor_pool[rng.gen_range(0..anchor_pool.len())];
                let same = &per_class[&labels[a]];
                let p = loop {
                    let cand = same[rng.gen_range(0..same.len())];
                    if cand != a {
                        break cand;
                    }
                };
                let neg = loop {
                    let cand = rng.gen_range(0..n);
                    if labels[cand] != labels[a] {
                        break cand;
                    }
                };
                triples.push((a, p, neg));
            }
            Ok(Batches::Triplets(
                triples.chunks(batch_size).map(<[_]>::to_vec).collect(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_batches_cover_everything_once() {
        let labels = vec![0usize; 100];
        match sample_batches(&labels, BatchMode::Plain, 64, 1, 0).unwrap() {
            Batches::Plain(batches) => {
                assert_eq!(batches.len(), 2);
                assert_eq!(batches[0].len(), 64);
                assert_eq!(batches[1].len(), 36);
                let mut seen: Vec<usize> = batches.concat();
                seen.sort_unstable();
                assert_eq!(seen, (0..100).collect::<Vec<_>>());
            }
            _ => panic!("plain mode returned triplets"),
        }
    }

    #[test]
    fn class_balanced_batch_of_60_over_6_classes_has_10_each() {
        let labels: Vec<usize> = (0..120).map(|i| i % 6).collect();
        match sample_batches(&labels, BatchMode::ClassBalanced, 60, 2, 0).unwrap() {
            Batches::Plain(batches) => {
                for batch in &batches {
                    assert_eq!(batch.len(), 60);
                    let mut counts = [0usize; 6];
                    for &i in batch {
                        counts[labels[i]] += 1;
                    }
                    assert_eq!(counts, [10; 6]);
                }
            }
            _ => panic!("class_balanced returned triplets"),
        }
    }

    #[test]
    fn triplet_constraints_hold_over_ten_thousand_draws() {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let mut checked = 0;
        for epoch in 0..an_epoch_count_reaching(10_000, 60) {
            match sample_batches(&labels, BatchMode::Triplet, 16, 7, epoch).unwrap() {
                Batches::Triplets(batches) => {
                    for (a, p, n) in batches.into_iter().flatten() {
                        assert_ne!(a, p, "anchor equals positive");
                        assert_eq!(labels[a], labels[p], "positive label differs");
                        assert_ne!(labels[a], labels[n], "negative shares the label");
                        checked += 1;
                    }
                }
                _ => panic!("triplet mode returned plain batches"),
            }
        }
        assert!(checked >= 10_000, "only {checked} triples drawn");
    }

    fn an_epoch_count_reaching(target: usize, per_epoch: usize) -> u64 {
        target.div_ceil(per_epoch) as u64
    }

    #[test]
    fn infeasible_modes_are_fatal() {
        // one item per class: no positives anywhere
        let labels = vec![0, 1, 2];
        assert!(matches!(
            sample_batches(&labels, BatchMode::Triplet, 4, 0, 0),
            Err(Error::InfeasibleSampler { .. })
        ));
        // single class: no negatives
        let labels = vec![0, 0, 0, 0];
        assert!(matches!(
            sample_batches(&labels, BatchMode::Triplet, 4, 0, 0),
            Err(Error::InfeasibleSampler { .. })
        ));
        // batch smaller than the class count
        let labels: Vec<usize> = (0..30).map(|i| i % 6).collect();
        assert!(matches!(
            sample_batches(&labels, BatchMode::ClassBalanced, 4, 0, 0),
            Err(Error::InfeasibleSampler { .. })
        ));
    }

    #[test]
    fn batches_are_deterministic_per_seed_and_epoch() {
        let labels: Vec<usize> = (0..50).map(|i| i % 5).collect();
        let a = sample_batches(&labels, BatchMode::Plain, 16, 9, 3).unwrap();
        let b = sample_batches(&labels, BatchMode::Plain, 16, 9, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_batches(&labels, BatchMode::Plain, 16, 9, 4).unwrap();
        assert_ne!(a, c);
    }
}
