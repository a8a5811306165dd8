//! Brute-force k-nearest-neighbor with Euclidean distance.

use crate::mat::Mat;
use crate::parallel::{default_mode, map_indexed};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub num_classes: usize,
    pub train_x: Mat,
    pub train_y: Vec<usize>,
}

impl KnnModel {
    /// Vote-share logits per query row. Ties between equally voted classes
    /// go to the smaller summed neighbor distance, then the lower index.
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let rows = map_indexed(x.rows(), default_mode(), |q| self.query(x.row(q)));
        Mat::from_rows(&rows)
    }

    fn query(&self, row: &[f64]) -> Vec<f64> {
        let n = self.train_x.rows();
        let k = self.k.min(n);
        let mut dists: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let d: f64 = self
                    .train_x
                    .row(i)
                    .iter()
                    .zip(row)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d, i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.num_classes];
        let mut dist_sum = vec![0.0; self.num_classes];
        for &(d, i) in dists.iter().take(k) {
            votes[self.train_y[i]] += 1.0;
            dist_sum[self.train_y[i]] += d.sqrt();
        }
        // break exact vote ties toward the closer class
        let top = votes.iter().cloned().fold(0.0f64, f64::max);
        let mut best = usize::MAX;
        for z in 0..self.num_classes {
            if votes[z] == top
                && (best == usize::MAX || dist_sum[z] < dist_sum[best] - 1e-12)
            {
                best = z;
            }
        }
        votes
            .iter()
            .enumerate()
            .map(|(z, v)| {
                let share = v / k as f64;
                let nudge = if z == best { 1e-9 } else { 0.0 };
                (share + nudge).max(1e-12).ln()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_memorizes_distinct_training_points() {
        let x = Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]]);
        let model = KnnModel {
            k: 1,
            num_classes: 3,
            train_x: x.clone(),
            train_y: vec![0, 1, 2],
        };
        let logits = model.predict_logits(&x);
        for i in 0..3 {
            let row = logits.row(i);
            let pred = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(pred, i);
        }
    }

    #[test]
    fn majority_of_five_wins() {
        let x = Mat::from_rows(&[
            vec![0.0],
            vec![0.1],
            vec![0.2],
            vec![10.0],
            vec![10.1],
        ]);
        let model = KnnModel {
            k: 5,
            num_classes: 2,
            train_x: x,
            train_y: vec![0, 0, 0, 1, 1],
        };
        let q = Mat::from_rows(&[vec![0.05]]);
        let logits = model.predict_logits(&q);
        assert!(logits.get(0, 0) > logits.get(0, 1));
    }
}
