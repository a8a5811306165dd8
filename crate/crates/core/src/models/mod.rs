//! The sixteen classifier configurations behind a uniform build / fit /
//! forward / embed surface.

pub mod classical;
pub mod neural;
mod spec;

pub use classical::{load_classical, save_classical, ClassicalModel, FittedClassical};
pub use neural::{Batch, NetOutput, NeuralNet};
pub use spec::{
    ClassicalHyper, ClassifierOutput, FeatureSet, FeatureShapes, ModelKind, ModelSpec, NeuralHyper,
};

use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::mat::Mat;
use crate::preprocess::Segment;

/// A built model: classical kinds await `fit_classical`, neural kinds are
/// initialized and await the epoch trainer.
#[derive(Debug, Clone)]
pub enum Model {
    Classical(ClassicalModel),
    Neural(NeuralNet),
}

/// Instantiates `spec` with the paper's hyperparameters and a seeded
/// initialization.
pub fn build(spec: &ModelSpec, shapes: FeatureShapes, seed: u64) -> Model {
    if spec.kind.is_classical() {
        Model::Classical(ClassicalModel::new(
            spec.kind,
            spec.num_classes,
            spec.classical.clone(),
            seed,
        ))
    } else {
        Model::Neural(NeuralNet::build(
            spec.kind,
            shapes,
            spec.neural.clone(),
            spec.num_classes,
            seed,
        ))
    }
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Classical(m) => m.kind,
            Model::Neural(n) => n.kind,
        }
    }

    /// Trainable parameter count (zero for instance-based classical kinds).
    pub fn trainable_parameters(&self) -> usize {
        match self {
            Model::Classical(_) => 0,
            Model::Neural(n) => n.param_count(),
        }
    }

    /// Fits a classical model on statistical features.
    pub fn fit_classical(&mut self, x: &Mat, y: &[usize]) -> Result<()> {
        match self {
            Model::Classical(m) => m.fit(x, y),
            Model::Neural(n) => Err(Error::Unsupported {
                kind: n.kind.to_string(),
                what: "fit_classical (use the epoch trainer)".into(),
            }),
        }
    }

    /// Deterministic evaluation-mode forward over one batch.
    pub fn forward(&self, batch: &Batch) -> Result<Vec<ClassifierOutput>> {
        match self {
            Model::Classical(m) => {
                let x = statistical_mat(batch, m.kind)?;
                let logits = m.predict_logits(&x)?;
                Ok((0..logits.rows())
                    .map(|i| ClassifierOutput::from_logits(logits.row(i).to_vec(), None))
                    .collect())
            }
            Model::Neural(n) => {
                let mut g = Graph::new();
                let vars = n.register(&mut g, false);
                let out = n.forward(&mut g, &vars, batch)?;
                let logits = g.value(out.logits);
                let emb = g.value(out.embedding);
                let z = n.num_classes;
                let d = emb.shape()[1];
                Ok((0..batch.len())
                    .map(|i| {
                        ClassifierOutput::from_logits(
                            logits.data()[i * z..(i + 1) * z].to_vec(),
                            Some(emb.data()[i * d..(i + 1) * d].to_vec()),
                        )
                    })
                    .collect())
            }
        }
    }

    /// Penultimate-layer embeddings, optionally scaled to unit norm (the
    /// contrastive-pretraining convention). Classical kinds have none.
    pub fn embed(&self, batch: &Batch, normalize: bool) -> Result<Vec<Vec<f64>>> {
        match self {
            Model::Classical(m) => Err(Error::Unsupported {
                kind: m.kind.to_string(),
                what: "embeddings".into(),
            }),
            Model::Neural(n) => {
                let mut g = Graph::new();
                let vars = n.register(&mut g, false);
                let out = n.forward(&mut g, &vars, batch)?;
                let emb = if normalize {
                    g.l2_normalize_rows(out.embedding)
                } else {
                    out.embedding
                };
                let t = g.value(emb);
                let d = t.shape()[1];
                Ok((0..batch.len())
                    .map(|i| t.data()[i * d..(i + 1) * d].to_vec())
                    .collect())
            }
        }
    }

    /// Forward over many segments in evaluation batches.
    pub fn predict_segments(
        &self,
        segments: &[&Segment],
        needs: FeatureSet,
        config: &FeatureConfig,
        batch_size: usize,
    ) -> Result<Vec<ClassifierOutput>> {
        let mut out = Vec::with_capacity(segments.len());
        for chunk in segments.chunks(batch_size.max(1)) {
            let batch = Batch::from_segments(chunk, needs, config)?;
            out.extend(self.forward(&batch)?);
        }
        Ok(out)
    }
}

/// Rebuilds a neural model from a checkpoint, verifying tensor names and
/// shapes against a fresh instantiation and returning the stored config
/// digest for provenance checks.
pub fn load_neural_checkpoint(
    path: &std::path::Path,
    spec: &ModelSpec,
    shapes: FeatureShapes,
) -> Result<(NeuralNet, [u8; 32])> {
    let (names, tensors, digest) = crate::autodiff::checkpoint::load(path)?;
    let mut net = NeuralNet::build(spec.kind, shapes, spec.neural.clone(), spec.num_classes, 0);
    if names != net.names {
        return Err(Error::BadFormat {
            path: path.to_path_buf(),
            why: format!(
                "checkpoint tensors do not match a {} of this shape",
                spec.kind
            ),
        });
    }
    for (fresh, loaded) in net.params.iter().zip(&tensors) {
        if fresh.shape() != loaded.shape() {
            return Err(Error::BadFormat {
                path: path.to_path_buf(),
                why: format!(
                    "tensor shape {:?} does not match expected {:?}",
                    loaded.shape(),
                    fresh.shape()
                ),
            });
        }
    }
    net.params = tensors;
    Ok((net, digest))
}

fn statistical_mat(batch: &Batch, kind: ModelKind) -> Result<Mat> {
    let t = batch.statistical.as_ref().ok_or_else(|| {
        Error::MissingRepresentation(format!("statistical (needed by {kind})"))
    })?;
    Ok(Mat::from_vec(
        t.shape()[0],
        t.shape()[1],
        t.data().to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ActivityLabel;

    fn seg(i: usize) -> Segment {
        let mut data = Vec::new();
        for t in 0..8 {
            for c in 0..2 {
                data.push(((t * (c + 1) + i) as f64 * 0.41).sin());
            }
        }
        Segment {
            id: i as u64,
            data: Mat::from_vec(8, 2, data),
            label: ActivityLabel {
                class_index: i % 2,
                class_name: format!("class_{}", i % 2),
            },
            user_id: 0,
            source_recording: 0,
            start_index: 0,
        }
    }

    #[test]
    fn knn_has_no_trainable_parameters() {
        let spec = ModelSpec::new(ModelKind::Knn);
        let shapes = FeatureShapes {
            steps: 8,
            channels: 2,
            scales: 4,
        };
        let model = build(&spec, shapes, 0);
        assert_eq!(model.trainable_parameters(), 0);
    }

    #[test]
    fn classical_embed_is_unsupported() {
        let spec = ModelSpec::new(ModelKind::Knn);
        let shapes = FeatureShapes {
            steps: 8,
            channels: 2,
            scales: 4,
        };
        let model = build(&spec, shapes, 0);
        let segs: Vec<Segment> = (0..3).map(seg).collect();
        let refs: Vec<&Segment> = segs.iter().collect();
        let batch = Batch::from_segments(&refs, FeatureSet::STATISTICAL, &FeatureConfig::default())
            .unwrap();
        assert!(matches!(
            model.embed(&batch, true),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn neural_fit_classical_is_unsupported() {
        let mut spec = ModelSpec::new(ModelKind::Lstm);
        spec.neural = NeuralHyper::toy();
        let shapes = FeatureShapes {
            steps: 8,
            channels: 2,
            scales: 4,
        };
        let mut model = build(&spec, shapes, 0);
        let x = Mat::from_rows(&[vec![0.0; 8], vec![1.0; 8]]);
        assert!(matches!(
            model.fit_classical(&x, &[0, 1]),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn batch_permutation_permutes_outputs() {
        let mut spec = ModelSpec::new(ModelKind::Lstm);
        spec.neural = NeuralHyper::toy();
        let shapes = FeatureShapes {
            steps: 8,
            channels: 2,
            scales: 4,
        };
        let model = build(&spec, shapes, 3);
        let segs: Vec<Segment> = (0..4).map(seg).collect();
        let fwd: Vec<&Segment> = segs.iter().collect();
        let rev: Vec<&Segment> = segs.iter().rev().collect();
        let cfg = FeatureConfig::default();
        let a = model
            .forward(&Batch::from_segments(&fwd, FeatureSet::TEMPORAL, &cfg).unwrap())
            .unwrap();
        let b = model
            .forward(&Batch::from_segments(&rev, FeatureSet::TEMPORAL, &cfg).unwrap())
            .unwrap();
        for i in 0..4 {
            assert_eq!(a[i].logits, b[3 - i].logits);
        }
    }

    #[test]
    fn normalized_embeddings_have_unit_norm() {
        let mut spec = ModelSpec::new(ModelKind::Lstm);
        spec.neural = NeuralHyper::toy();
        let shapes = FeatureShapes {
            steps: 8,
            channels: 2,
            scales: 4,
        };
        let model = build(&spec, shapes, 3);
        let segs: Vec<Segment> = (0..3).map(seg).collect();
        let refs: Vec<&Segment> = segs.iter().collect();
        let batch =
            Batch::from_segments(&refs, FeatureSet::TEMPORAL, &FeatureConfig::default()).unwrap();
        let embs = model.embed(&batch, true).unwrap();
        for e in &embs {
            let norm: f64 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "norm {norm}");
        }
        // identical inputs give identical embeddings
        let again = model.embed(&batch, true).unwrap();
        assert_eq!(embs, again);
    }
}
