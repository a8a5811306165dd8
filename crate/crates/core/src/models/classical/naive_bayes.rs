//! Gaussian naive Bayes with closed-form per-class moments.

use crate::mat::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    /// `[Z × F]` per-class feature means.
    pub means: Mat,
    /// `[Z × F]` per-class feature variances (smoothed).
    pub vars: Mat,
    pub log_priors: Vec<f64>,
}

/// Fits per-class Gaussians; variances are smoothed by `1e-9 ·
/// max-feature-variance` to keep constant features finite.
pub fn fit_gaussian_nb(x: &Mat, y: &[usize], num_classes: usize) -> GaussianNbModel {
    let (n, f) = (x.rows(), x.cols());
    let mut counts = vec![0usize; num_classes];
    let mut means = Mat::zeros(num_classes, f);
    for i in 0..n {
        counts[y[i]] += 1;
        for (j, v) in x.row(i).iter().enumerate() {
            means.set(y[i], j, means.get(y[i], j) + v);
        }
    }
    for z in 0..num_classes {
        let c = counts[z].max(1) as f64;
        for j in 0..f {
            means.set(z, j, means.get(z, j) / c);
        }
    }
    let mut vars = Mat::zeros(num_classes, f);
    for i in 0..n {
        for (j, v) in x.row(i).iter().enumerate() {
            let d = v - means.get(y[i], j);
            vars.set(y[i], j, vars.get(y[i], j) + d * d);
        }
    }
    // global feature variance for the smoothing floor
    let mut global_max_var = 0.0f64;
    for j in 0..f {
        let col_mean = (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64;
        let col_var = (0..n).map(|i| (x.get(i, j) - col_mean).powi(2)).sum::<f64>() / n as f64;
        global_max_var = global_max_var.max(col_var);
    }
    let eps = 1e-9 * global_max_var.max(1e-12);
    for z in 0..num_classes {
        let c = counts[z].max(1) as f64;
        for j in 0..f {
            vars.set(z, j, vars.get(z, j) / c + eps);
        }
    }
    let log_priors = counts
        .iter()
        .map(|&c| ((c.max(1)) as f64 / n as f64).ln())
        .collect();
    GaussianNbModel {
        means,
        vars,
        log_priors,
    }
}

impl GaussianNbModel {
    /// Unnormalized log posteriors as logits.
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let z = self.means.rows();
        let mut out = Mat::zeros(x.rows(), z);
        for i in 0..x.rows() {
            let row = x.row(i);
            for c in 0..z {
                let mut score = self.log_priors[c];
                for (j, v) in row.iter().enumerate() {
                    let var = self.vars.get(c, j);
                    let d = v - self.means.get(c, j);
                    score -= 0.5 * ((2.0 * PI * var).ln() + d * d / var);
                }
                out.set(i, c, score);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_boundary_near_analytic_midpoint() {
        // Two 1-d Gaussians with equal variance and priors: the posterior
        // crossover sits at the midpoint of the means.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let u = (i as f64 / 200.0 - 0.5) * 2.0; // deterministic spread in [-1, 1]
            rows.push(vec![u]);
            y.push(0);
            rows.push(vec![4.0 + u]);
            y.push(1);
        }
        let x = Mat::from_rows(&rows);
        let model = fit_gaussian_nb(&x, &y, 2);
        // scan for the crossover
        let mut boundary = f64::NAN;
        let mut prev = 0usize;
        for step in 0..4000 {
            let v = step as f64 * 0.001;
            let logits = model.predict_logits(&Mat::from_rows(&[vec![v]]));
            let pred = if logits.get(0, 1) > logits.get(0, 0) { 1 } else { 0 };
            if step > 0 && pred != prev {
                boundary = v;
                break;
            }
            prev = pred;
        }
        assert!((boundary - 2.0).abs() < 0.1, "boundary {boundary} vs midpoint 2.0");
    }

    #[test]
    fn constant_feature_stays_finite() {
        let x = Mat::from_rows(&[vec![1.0, 5.0], vec![1.0, 6.0], vec![1.0, -5.0], vec![1.0, -6.0]]);
        let y = vec![0, 0, 1, 1];
        let model = fit_gaussian_nb(&x, &y, 2);
        let logits = model.predict_logits(&x);
        assert!(logits.data().iter().all(|v| v.is_finite()));
    }
}
