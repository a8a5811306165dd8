//! The nine classical models behind one fit/predict surface, with a
//! versioned JSON serialization (trees as node arrays, Gaussians as
//! moment tables).

mod ensemble;
mod knn;
mod linear;
mod naive_bayes;
mod tree;

pub use ensemble::{AdaBoostModel, ForestModel, GbdtModel};
pub use knn::KnnModel;
pub use linear::{LinearOvr, MlpModel, SoftmaxModel};
pub use naive_bayes::GaussianNbModel;
pub use tree::{Tree, TreeNode};

use super::spec::{ClassicalHyper, ModelKind};
use crate::error::{Error, Result};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

const FORMAT_VERSION: u32 = 1;

/// A fitted classical model's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedClassical {
    Knn(KnnModel),
    Tree { tree: Tree, num_classes: usize },
    Forest(ForestModel),
    Gbdt(GbdtModel),
    AdaBoost(AdaBoostModel),
    GaussianNb(GaussianNbModel),
    LinearOvr(LinearOvr),
    Softmax(SoftmaxModel),
    Mlp(MlpModel),
}

/// One of the nine classical kinds plus its (possibly absent) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModel {
    pub kind: ModelKind,
    pub num_classes: usize,
    pub hyper: ClassicalHyper,
    pub seed: u64,
    pub fitted: Option<FittedClassical>,
}

impl ClassicalModel {
    pub fn new(kind: ModelKind, num_classes: usize, hyper: ClassicalHyper, seed: u64) -> Self {
        assert!(kind.is_classical(), "{kind} is not a classical kind");
        ClassicalModel {
            kind,
            num_classes,
            hyper,
            seed,
            fitted: None,
        }
    }

    /// Trains on statistical features `x: [N × 4C]`.
    pub fn fit(&mut self, x: &Mat, y: &[usize]) -> Result<()> {
        if x.rows() < self.num_classes {
            return Err(Error::Config(format!(
                "{} training rows for {} classes",
                x.rows(),
                self.num_classes
            )));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                num_classes: self.num_classes,
            });
        }
        let distinct: HashSet<usize> = y.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(Error::SingleClass);
        }
        let z = self.num_classes;
        let h = &self.hyper;
        let all: Vec<usize> = (0..x.rows()).collect();
        self.fitted = Some(match self.kind {
            ModelKind::Knn => FittedClassical::Knn(KnnModel {
                k: h.knn_k,
                num_classes: z,
                train_x: x.clone(),
                train_y: y.to_vec(),
            }),
            ModelKind::Dt => FittedClassical::Tree {
                tree: tree::fit_classification(
                    x,
                    y,
                    &all,
                    tree::ClassFitOptions {
                        num_classes: z,
                        max_depth: h.dt_max_depth,
                        weights: None,
                        features_per_split: None,
                        rng: None,
                    },
                ),
                num_classes: z,
            },
            ModelKind::Rf => FittedClassical::Forest(ensemble::fit_forest(
                x,
                y,
                z,
                h.rf_trees,
                h.rf_max_depth,
                self.seed,
            )),
            ModelKind::Gbdt => FittedClassical::Gbdt(ensemble::fit_gbdt(
                x,
                y,
                z,
                h.gbdt_rounds,
                h.gbdt_depth,
                h.gbdt_shrinkage,
            )),
            ModelKind::Adaboost => {
                FittedClassical::AdaBoost(ensemble::fit_adaboost(x, y, z, h.adaboost_rounds))
            }
            ModelKind::GaussianNb => {
                FittedClassical::GaussianNb(naive_bayes::fit_gaussian_nb(x, y, z))
            }
            ModelKind::Svm => FittedClassical::LinearOvr(linear::fit_svm(x, y, z, h, self.seed)),
            ModelKind::Lr => FittedClassical::Softmax(linear::fit_softmax(x, y, z, h, self.seed)),
            ModelKind::Mlp => FittedClassical::Mlp(linear::fit_mlp(
                x,
                y,
                z,
                super::spec::NeuralHyper::default().mlp_hidden,
                h,
                self.seed,
            )),
            other => unreachable!("{other} handled by the neural trainer"),
        });
        Ok(())
    }

    /// Raw class scores `[N × Z]`; errors when unfitted.
    pub fn predict_logits(&self, x: &Mat) -> Result<Mat> {
        let fitted = self.fitted.as_ref().ok_or_else(|| Error::Unsupported {
            kind: self.kind.to_string(),
            what: "prediction before fit".into(),
        })?;
        Ok(match fitted {
            FittedClassical::Knn(m) => m.predict_logits(x),
            FittedClassical::Tree { tree, num_classes } => {
                let mut out = Mat::zeros(x.rows(), *num_classes);
                for i in 0..x.rows() {
                    for (zi, p) in tree.predict_leaf(x.row(i)).iter().enumerate() {
                        out.set(i, zi, p.max(1e-12).ln());
                    }
                }
                out
            }
            FittedClassical::Forest(m) => m.predict_logits(x),
            FittedClassical::Gbdt(m) => m.predict_logits(x),
            FittedClassical::AdaBoost(m) => m.predict_logits(x),
            FittedClassical::GaussianNb(m) => m.predict_logits(x),
            FittedClassical::LinearOvr(m) => m.predict_logits(x),
            FittedClassical::Softmax(m) => m.predict_logits(x),
            FittedClassical::Mlp(m) => m.predict_logits(x),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ClassicalFile {
    format_version: u32,
    kind: ModelKind,
    num_classes: usize,
    hyper: ClassicalHyper,
    seed: u64,
    model: FittedClassical,
}

/// Writes a fitted classical model as versioned JSON.
pub fn save_classical(path: &Path, model: &ClassicalModel) -> Result<()> {
    let fitted = model.fitted.as_ref().ok_or_else(|| Error::Unsupported {
        kind: model.kind.to_string(),
        what: "saving before fit".into(),
    })?;
    let file = ClassicalFile {
        format_version: FORMAT_VERSION,
        kind: model.kind,
        num_classes: model.num_classes,
        hyper: model.hyper.clone(),
        seed: model.seed,
        model: fitted.clone(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::Other(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_classical(path: &Path) -> Result<ClassicalModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ClassicalFile = serde_json::from_str(&text).map_err(|e| Error::BadFormat {
        path: path.to_path_buf(),
        why: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::BadFormat {
            path: path.to_path_buf(),
            why: format!("unsupported classical model version {}", file.format_version),
        });
    }
    Ok(ClassicalModel {
        kind: file.kind,
        num_classes: file.num_classes,
        hyper: file.hyper,
        seed: file.seed,
        fitted: Some(file.model),
    })
}
