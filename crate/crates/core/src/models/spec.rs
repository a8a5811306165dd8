//! Declarative descriptions of the sixteen classifier configurations.

use serde::{Deserialize, Serialize};

/// Every classifier kind in the zoo: nine classical models plus seven
/// neural architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    Knn,
    Gbdt,
    Lr,
    Dt,
    Rf,
    Adaboost,
    GaussianNb,
    Mlp,
    Resnet,
    Transformer,
    Lstm,
    Bilstm,
    LstmAttention,
    Cnn1d,
    Mrnet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 16] = [
        ModelKind::Svm,
        ModelKind::Knn,
        ModelKind::Gbdt,
        ModelKind::Lr,
        ModelKind::Dt,
        ModelKind::Rf,
        ModelKind::Adaboost,
        ModelKind::GaussianNb,
        ModelKind::Mlp,
        ModelKind::Resnet,
        ModelKind::Transformer,
        ModelKind::Lstm,
        ModelKind::Bilstm,
        ModelKind::LstmAttention,
        ModelKind::Cnn1d,
        ModelKind::Mrnet,
    ];

    /// The 9 kinds trained by `fit_classical` on statistical features.
    pub fn is_classical(self) -> bool {
        !self.is_neural()
    }

    /// The 7 architectures trained by the epoch trainer; only these expose
    /// embeddings and support pretraining.
    pub fn is_neural(self) -> bool {
        matches!(
            self,
            ModelKind::Resnet
                | ModelKind::Transformer
                | ModelKind::Lstm
                | ModelKind::Bilstm
                | ModelKind::LstmAttention
                | ModelKind::Cnn1d
                | ModelKind::Mrnet
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Knn => "knn",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Lr => "lr",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Adaboost => "adaboost",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::Mlp => "mlp",
            ModelKind::Resnet => "resnet",
            ModelKind::Transformer => "transformer",
            ModelKind::Lstm => "lstm",
            ModelKind::Bilstm => "bilstm",
            ModelKind::LstmAttention => "lstm_attention",
            ModelKind::Cnn1d => "cnn1d",
            ModelKind::Mrnet => "mrnet",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_lowercase().replace('-', "_");
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == needle)
            .ok_or_else(|| crate::Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// Which representations a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSet {
    pub temporal: bool,
    pub statistical: bool,
    pub spectral: bool,
}

impl FeatureSet {
    pub const TEMPORAL: FeatureSet = FeatureSet {
        temporal: true,
        statistical: false,
        spectral: false,
    };
    pub const STATISTICAL: FeatureSet = FeatureSet {
        temporal: false,
        statistical: true,
        spectral: false,
    };
    pub const SPECTRAL: FeatureSet = FeatureSet {
        temporal: false,
        statistical: false,
        spectral: true,
    };
    pub const ALL: FeatureSet = FeatureSet {
        temporal: true,
        statistical: true,
        spectral: true,
    };
}

/// Input dimensions: segment length S, channel count C and CWT scale count K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureShapes {
    pub steps: usize,
    pub channels: usize,
    pub scales: usize,
}

impl FeatureShapes {
    pub fn statistical_dim(&self) -> usize {
        4 * self.channels
    }
}

/// Classical hyperparameters. Paper-stated values are the defaults; the
/// rest are fixed here and surfaced in report provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicalHyper {
    /// KNN neighbor count (paper: 5), Euclidean metric.
    pub knn_k: usize,
    /// Random forest size (paper: 100).
    pub rf_trees: usize,
    /// Unlimited when `None`.
    pub rf_max_depth: Option<usize>,
    pub dt_max_depth: Option<usize>,
    pub gbdt_rounds: usize,
    pub gbdt_depth: usize,
    pub gbdt_shrinkage: f64,
    pub adaboost_rounds: usize,
    /// Pegasos regularization for the linear SVM.
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    /// Adam epochs for softmax regression and the statistical MLP.
    pub gradient_epochs: usize,
    pub gradient_batch: usize,
    pub gradient_lr: f64,
}

impl Default for ClassicalHyper {
    fn default() -> Self {
        ClassicalHyper {
            knn_k: 5,
            rf_trees: 100,
            rf_max_depth: None,
            dt_max_depth: None,
            gbdt_rounds: 100,
            gbdt_depth: 3,
            gbdt_shrinkage: 0.1,
            adaboost_rounds: 50,
            svm_lambda: 1e-4,
            svm_epochs: 100,
            gradient_epochs: 100,
            gradient_batch: 64,
            gradient_lr: 0.001,
        }
    }
}

/// Neural architecture widths. Paper-stated values are the defaults;
/// everything is narrowable for gradient-check-sized instantiations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralHyper {
    /// Hidden units per LSTM direction (paper: 64).
    pub lstm_hidden: usize,
    /// Additive-attention projection width.
    pub attention_dim: usize,
    /// CNN1D filter counts (paper: 64 and 32) and kernel size (paper: 3).
    pub cnn_filters: (usize, usize),
    pub kernel_size: usize,
    /// Transformer depth and heads (paper: 2 layers, 8 heads).
    pub transformer_layers: usize,
    pub transformer_heads: usize,
    pub d_model: usize,
    pub ff_width: usize,
    /// ResNet stage channels; each block downsamples by 2.
    pub resnet_channels: Vec<usize>,
    /// MRNet spectral sub-network filter counts.
    pub mrnet_conv: (usize, usize),
    /// Fully connected head (paper: 256, 128 then the class layer).
    pub head: (usize, usize),
    /// Statistical MLP hidden sizes ("two hidden layers").
    pub mlp_hidden: (usize, usize),
}

impl Default for NeuralHyper {
    fn default() -> Self {
        NeuralHyper {
            lstm_hidden: 64,
            attention_dim: 64,
            cnn_filters: (64, 32),
            kernel_size: 3,
            transformer_layers: 2,
            transformer_heads: 8,
            d_model: 64,
            ff_width: 128,
            resnet_channels: vec![16, 32, 64, 128],
            mrnet_conv: (16, 32),
            head: (256, 128),
            mlp_hidden: (128, 64),
        }
    }
}

impl NeuralHyper {
    /// A narrow configuration for finite-difference gradient checks.
    pub fn toy() -> Self {
        NeuralHyper {
            lstm_hidden: 4,
            attention_dim: 4,
            cnn_filters: (4, 3),
            kernel_size: 3,
            transformer_layers: 2,
            transformer_heads: 2,
            d_model: 4,
            ff_width: 6,
            resnet_channels: vec![2, 3, 4, 5],
            mrnet_conv: (2, 3),
            head: (8, 5),
            mlp_hidden: (6, 4),
        }
    }
}

/// One of the sixteen classifier configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub num_classes: usize,
    #[serde(default)]
    pub classical: ClassicalHyper,
    #[serde(default)]
    pub neural: NeuralHyper,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            num_classes: 6,
            classical: ClassicalHyper::default(),
            neural: NeuralHyper::default(),
        }
    }

    /// The representations this kind consumes; enforced at batch build time.
    pub fn input_features(&self) -> FeatureSet {
        match self.kind {
            k if k.is_classical() => FeatureSet::STATISTICAL,
            ModelKind::Resnet => FeatureSet::SPECTRAL,
            ModelKind::Mrnet => FeatureSet::ALL,
            _ => FeatureSet::TEMPORAL,
        }
    }
}

/// Per-item classifier output. `probabilities` is always the softmax of
/// `logits`; `embedding` is the 128-unit penultimate activation and exists
/// only for the seven neural architectures.
#[derive(Debug, Clone)]
pub struct ClassifierOutput {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub embedding: Option<Vec<f64>>,
}

impl ClassifierOutput {
    pub fn from_logits(logits: Vec<f64>, embedding: Option<Vec<f64>>) -> Self {
        let mut probabilities = logits.clone();
        crate::autodiff::graph::softmax_slice(&mut probabilities);
        ClassifierOutput {
            logits,
            probabilities,
            embedding,
        }
    }

    /// Predicted class: argmax with ties resolved to the lowest index.
    pub fn predicted(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.logits.iter().enumerate() {
            if *v > self.logits[best] {
                best = i;
            }
        }
        best
    }
}
