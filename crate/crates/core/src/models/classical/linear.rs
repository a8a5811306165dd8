//! Linear classical models: one-vs-rest hinge SVM (Pegasos subgradient
//! descent), softmax regression and the two-hidden-layer statistical MLP.
//! The gradient-trained pair runs through the autodiff graph with Adam.

use crate::autodiff::{init, AdamState, Graph, Tensor};
use crate::derive_seed;
use crate::mat::Mat;
use crate::models::spec::ClassicalHyper;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One-vs-rest linear scorer `w·x + b` per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOvr {
    /// `[Z × F]`.
    pub w: Mat,
    pub b: Vec<f64>,
}

impl LinearOvr {
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let z = self.w.rows();
        let mut out = Mat::zeros(x.rows(), z);
        for i in 0..x.rows() {
            let row = x.row(i);
            for c in 0..z {
                let score: f64 = self
                    .w
                    .row(c)
                    .iter()
                    .zip(row)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + self.b[c];
                out.set(i, c, score);
            }
        }
        out
    }
}

/// Pegasos: per class, minimize `λ/2 ||w||² + mean hinge` with step
/// `1/(λ·t)` over shuffled epochs.
pub fn fit_svm(x: &Mat, y: &[usize], num_classes: usize, hyper: &ClassicalHyper, seed: u64) -> LinearOvr {
    let (n, f) = (x.rows(), x.cols());
    let lambda = hyper.svm_lambda;
    let mut w = Mat::zeros(num_classes, f);
    let mut b = vec![0.0; num_classes];
    for class in 0..num_classes {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("svm-{class}")));
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 1u64;
        for _ in 0..hyper.svm_epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let target = if y[i] == class { 1.0 } else { -1.0 };
                let eta = 1.0 / (lambda * t as f64);
                let margin = target
                    * (w.row(class)
                        .iter()
                        .zip(x.row(i))
                        .map(|(a, v)| a * v)
                        .sum::<f64>()
                        + b[class]);
                let decay = 1.0 - eta * lambda;
                let wrow = w.row_mut(class);
                if margin < 1.0 {
                    for (wv, xv) in wrow.iter_mut().zip(x.row(i)) {
                        *wv = *wv * decay + eta * target * xv;
                    }
                    b[class] += eta * target;
                } else {
                    for wv in wrow.iter_mut() {
                        *wv *= decay;
                    }
                }
                t += 1;
            }
        }
    }
    LinearOvr { w, b }
}

/// Softmax regression weights: `w [F × Z]`, `b [Z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub w: Mat,
    pub b: Vec<f64>,
}

impl SoftmaxModel {
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        linear_forward(x, &self.w, &self.b)
    }
}

/// Two-hidden-layer ReLU MLP on statistical vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
}

impl MlpModel {
    pub fn predict_logits(&self, x: &Mat) -> Mat {
        let mut h1 = linear_forward(x, &self.w1, &self.b1);
        relu_in_place(&mut h1);
        let mut h2 = linear_forward(&h1, &self.w2, &self.b2);
        relu_in_place(&mut h2);
        linear_forward(&h2, &self.w3, &self.b3)
    }
}

fn linear_forward(x: &Mat, w: &Mat, b: &[f64]) -> Mat {
    let data = crate::autodiff::kernels::matmul(
        x.data(),
        x.rows(),
        x.cols(),
        w.data(),
        w.cols(),
        crate::parallel::default_mode(),
    );
    let mut out = Mat::from_vec(x.rows(), w.cols(), data);
    for r in 0..out.rows() {
        for (j, v) in out.row_mut(r).iter_mut().enumerate() {
            *v += b[j];
        }
    }
    out
}

fn relu_in_place(m: &mut Mat) {
    for v in m.data_mut() {
        *v = v.max(0.0);
    }
}

/// Softmax regression trained with Adam on fused cross-entropy.
pub fn fit_softmax(
    x: &Mat,
    y: &[usize],
    num_classes: usize,
    hyper: &ClassicalHyper,
    seed: u64,
) -> SoftmaxModel {
    let f = x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "lr-init"));
    let mut params = vec![
        init::uniform(&mut rng, vec![f, num_classes], f),
        init::zeros(vec![num_classes]),
    ];
    gradient_train(x, y, &mut params, hyper, seed, |g, vars, xb| {
        let xv = g.constant(xb);
        g.linear(xv, vars[0], vars[1])
    });
    SoftmaxModel {
        w: tensor_to_mat(&params[0]),
        b: params[1].data().to_vec(),
    }
}

/// Statistical MLP trained with Adam on fused cross-entropy.
pub fn fit_mlp(
    x: &Mat,
    y: &[usize],
    num_classes: usize,
    hidden: (usize, usize),
    hyper: &ClassicalHyper,
    seed: u64,
) -> MlpModel {
    let f = x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "mlp-init"));
    let mut params = vec![
        init::uniform(&mut rng, vec![f, hidden.0], f),
        init::zeros(vec![hidden.0]),
        init::uniform(&mut rng, vec![hidden.0, hidden.1], hidden.0),
        init::zeros(vec![hidden.1]),
        init::uniform(&mut rng, vec![hidden.1, num_classes], hidden.1),
        init::zeros(vec![num_classes]),
    ];
    gradient_train(x, y, &mut params, hyper, seed, |g, vars, xb| {
        let xv = g.constant(xb);
        let h1 = g.linear(xv, vars[0], vars[1]);
        let a1 = g.relu(h1);
        let h2 = g.linear(a1, vars[2], vars[3]);
        let a2 = g.relu(h2);
        g.linear(a2, vars[4], vars[5])
    });
    MlpModel {
        w1: tensor_to_mat(&params[0]),
        b1: params[1].data().to_vec(),
        w2: tensor_to_mat(&params[2]),
        b2: params[3].data().to_vec(),
        w3: tensor_to_mat(&params[4]),
        b3: params[5].data().to_vec(),
    }
}

fn tensor_to_mat(t: &Tensor) -> Mat {
    Mat::from_vec(t.shape()[0], t.shape()[1], t.data().to_vec())
}

fn gradient_train(
    x: &Mat,
    y: &[usize],
    params: &mut Vec<Tensor>,
    hyper: &ClassicalHyper,
    seed: u64,
    forward: impl Fn(&mut Graph, &[crate::autodiff::Var], Tensor) -> crate::autodiff::Var,
) {
    let n = x.rows();
    let mut adam = AdamState::new(params, hyper.gradient_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gradient-batches"));
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..hyper.gradient_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.gradient_batch.max(1)) {
            let mut xb = Vec::with_capacity(chunk.len() * x.cols());
            let mut yb = Vec::with_capacity(chunk.len());
            for &i in chunk {
                xb.extend_from_slice(x.row(i));
                yb.push(y[i]);
            }
            let mut g = Graph::new();
            let vars: Vec<_> = params.iter().map(|p| g.leaf(p.clone())).collect();
            let logits = forward(&mut g, &vars, Tensor::new(vec![chunk.len(), x.cols()], xb));
            let loss = g.softmax_cross_entropy(logits, &yb);
            let mut grads = g.backward(loss).expect("single backward");
            let per_param: Vec<Option<Tensor>> = vars.iter().map(|v| grads.take(*v)).collect();
            adam.step(params, &per_param);
        }
    }
}
