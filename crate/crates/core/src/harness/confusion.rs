//! Confusion matrices: counts of (true class, predicted class).

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// `matrix[true][predicted]` counts.
pub fn confusion_matrix(
    predictions: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<Vec<Vec<u64>>> {
    if predictions.len() != labels.len() {
        return Err(Error::Config(format!(
            "confusion matrix: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut matrix = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        if t >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: t,
                num_classes,
            });
        }
        if p >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: p,
                num_classes,
            });
        }
        matrix[t][p] += 1;
    }
    Ok(matrix)
}

/// Exactly `trace / total`; zero on an empty matrix.
pub fn accuracy_from_confusion(matrix: &[Vec<u64>]) -> f64 {
    let total: u64 = matrix.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let trace: u64 = matrix.iter().enumerate().map(|(i, row)| row[i]).sum();
    trace as f64 / total as f64
}

pub fn write_confusion_csv(path: &Path, matrix: &[Vec<u64>], class_names: &[String]) -> Result<()> {
    let mut out = String::from("true\\predicted");
    for name in class_names {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (i, row) in matrix.iter().enumerate() {
        let _ = write!(out, "{}", class_names[i]);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct_is_diagonal() {
        let labels = vec![0, 1, 2, 1, 0, 2];
        let m = confusion_matrix(&labels, &labels, 3).unwrap();
        assert_eq!(m[0][0], 2);
        assert_eq!(m[1][1], 2);
        assert_eq!(m[2][2], 2);
        let off: u64 = m
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
            .map(|(_, v)| *v)
            .sum();
        assert_eq!(off, 0);
        assert_eq!(accuracy_from_confusion(&m), 1.0);
    }

    #[test]
    fn predicting_only_class_zero_fills_first_column() {
        let predictions = vec![0; 5];
        let labels = vec![0, 1, 2, 1, 0];
        let m = confusion_matrix(&predictions, &labels, 3).unwrap();
        for (t, row) in m.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                if p == 0 {
                    assert_eq!(*v, labels.iter().filter(|&&l| l == t).count() as u64);
                } else {
                    assert_eq!(*v, 0);
                }
            }
        }
        assert!((accuracy_from_confusion(&m) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn twelve_item_fixture_matches_hand_tally() {
        let labels = vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 0, 1, 2];
        let preds = vec![0, 1, 0, 1, 1, 2, 2, 2, 0, 0, 1, 2];
        let m = confusion_matrix(&preds, &labels, 3).unwrap();
        // hand count: class0 -> (0:3, 1:1, 2:0); class1 -> (1:3, 2:1);
        // class2 -> (0:1, 2:3)
        assert_eq!(m[0], vec![3, 1, 0]);
        assert_eq!(m[1], vec![0, 3, 1]);
        assert_eq!(m[2], vec![1, 0, 3]);
        let total: u64 = m.iter().flatten().sum();
        assert_eq!(total, 12);
        assert!((accuracy_from_confusion(&m) - 9.0 / 12.0).abs() < 1e-15);
        // row sums are per-class counts
        for (t, row) in m.iter().enumerate() {
            assert_eq!(
                row.iter().sum::<u64>(),
                labels.iter().filter(|&&l| l == t).count() as u64
            );
        }
    }

    #[test]
    fn length_mismatch_is_fatal() {
        assert!(confusion_matrix(&[0, 1], &[0], 2).is_err());
    }
}
