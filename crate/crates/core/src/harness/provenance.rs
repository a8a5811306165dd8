//! Registry of resolved design choices. Every entry is embedded verbatim
//! in each report's provenance block; a harness test checks completeness
//! against this list.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub module: &'static str,
    pub key: &'static str,
    pub text: &'static str,
}

pub const DECISIONS: &[Decision] = &[
    Decision {
        module: "dataset",
        key: "recording_boundaries",
        text: "a new recording starts when the user or activity changes or the timestamp gap exceeds 10x the median sampling interval",
    },
    Decision {
        module: "dataset",
        key: "default_split",
        text: "default split is segment-stratified 70/10/20; by-user splitting is available and flagged because overlapping windows leak across segment-level splits",
    },
    Decision {
        module: "dataset",
        key: "class_name_normalization",
        text: "class names match case-insensitively after trimming; manifests store the canonical names",
    },
    Decision {
        module: "dataset",
        key: "second_corpus_carrier",
        text: "the six-channel corpus rides the generic csv schema; reproducing its published numbers is best-effort, not a gate",
    },
    Decision {
        module: "preprocess",
        key: "stride",
        text: "stride 45 from window 150 at 0.7 overlap (S - floor(0.7*S))",
    },
    Decision {
        module: "preprocess",
        key: "smoothing_edges",
        text: "the moving average uses a centered window truncated at segment edges, preserving segment length",
    },
    Decision {
        module: "preprocess",
        key: "normalization_fit",
        text: "min-max statistics are fitted on the training split only and applied with clamping elsewhere; per-segment normalization is rejected",
    },
    Decision {
        module: "preprocess",
        key: "smoothing_order",
        text: "smoothing runs per segment after windowing",
    },
    Decision {
        module: "features",
        key: "morlet_parameters",
        text: "Morlet center frequency 6.0; the spectral value is the complex magnitude",
    },
    Decision {
        module: "features",
        key: "scale_ladder",
        text: "wavelet scales are the integers 1..K",
    },
    Decision {
        module: "features",
        key: "kernel_truncation",
        text: "wavelet support is truncated at four envelope standard deviations with zero padding at the boundaries",
    },
    Decision {
        module: "features",
        key: "spectral_precision",
        text: "spectral tensors are computed in 64-bit and cached in 32-bit",
    },
    Decision {
        module: "autodiff",
        key: "precision",
        text: "all training arithmetic is 64-bit",
    },
    Decision {
        module: "autodiff",
        key: "initialization",
        text: "weights draw from U(-sqrt(1/fan_in), +sqrt(1/fan_in)); biases start at zero except the LSTM forget gate at one",
    },
    Decision {
        module: "autodiff",
        key: "convolution_geometry",
        text: "conv1d is stride-1 same-padded; downsampling conv2d uses stride 2 with explicit padding 1 and 1x1 projection shortcuts",
    },
    Decision {
        module: "models",
        key: "transformer_internals",
        text: "transformer: d_model 64, feed-forward width 128, learned positional embeddings, 8 heads, post-layer-norm, mean pooling over time before the head",
    },
    Decision {
        module: "models",
        key: "resnet_blocks",
        text: "each residual block is two 3x3 convolutions plus a skip; channels 16/32/64/128 with stride-2 entry and projection shortcuts; global average pool before the head",
    },
    Decision {
        module: "models",
        key: "attention_variant",
        text: "lstm-attention uses additive attention over all time-step outputs producing one context vector",
    },
    Decision {
        module: "models",
        key: "mrnet_subnetworks",
        text: "mrnet sub-networks: one-layer LSTM(64) temporal, one 64-unit fully connected statistical, two-convolution spectral stack with a 2x2 max pool and global average pool",
    },
    Decision {
        module: "models",
        key: "classical_hyperparameters",
        text: "unstated classical settings are fixed: unlimited tree depth, 50 adaboost stump rounds, 100 gbdt depth-3 rounds at shrinkage 0.1, pegasos lambda 1e-4, softmax regression and the statistical mlp via Adam",
    },
    Decision {
        module: "training",
        key: "iterations_are_epochs",
        text: "iteration counts are read as full epochs over the training split",
    },
    Decision {
        module: "training",
        key: "contrastive_denominator",
        text: "the contrastive denominator runs over all non-anchor batch items (canonical supervised form); the printed positives-only denominator is degenerate",
    },
    Decision {
        module: "training",
        key: "triplet_margin",
        text: "triplet margin 1.0 under Euclidean distance on raw 128-d embeddings",
    },
    Decision {
        module: "training",
        key: "batching",
        text: "batch size 64; class-balanced batches during contrastive pretraining; plain shuffled batches otherwise",
    },
    Decision {
        module: "training",
        key: "no_projection_head",
        text: "embeddings are taken from the 128-unit penultimate layer directly, L2-normalized for the contrastive loss only",
    },
    Decision {
        module: "training",
        key: "finetune_whole_network",
        text: "pretraining is followed by end-to-end cross-entropy fine-tuning without freezing the encoder",
    },
    Decision {
        module: "harness",
        key: "model_selection",
        text: "model selection uses validation accuracy; the test split is evaluated exactly once per model",
    },
    Decision {
        module: "harness",
        key: "table_units",
        text: "table values are fractions in [0,1]",
    },
    Decision {
        module: "harness",
        key: "failure_isolation",
        text: "a failing model is recorded in the report and skipped; the run continues with the remaining models",
    },
];

/// Owned copy for report embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub module: String,
    pub key: String,
    pub text: String,
}

pub fn all_decisions() -> Vec<DecisionRecord> {
    DECISIONS
        .iter()
        .map(|d| DecisionRecord {
            module: d.module.to_string(),
            key: d.key.to_string(),
            text: d.text.to_string(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_keys_are_unique() {
        let mut keys: Vec<(&str, &str)> = DECISIONS.iter().map(|d| (d.module, d.key)).collect();
        keys.sort_unstable();
        let before = keys.len();
        keys.dedup();
        assert_eq!(before, keys.len());
    }

    #[test]
    fn every_module_is_covered() {
        for module in ["dataset", "preprocess", "features", "autodiff", "models", "training", "harness"] {
            assert!(
                DECISIONS.iter().any(|d| d.module == module),
                "no decisions recorded for {module}"
            );
        }
    }
}
