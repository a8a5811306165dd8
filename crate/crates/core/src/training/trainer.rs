//! Epoch trainer for the neural architectures: plain cross-entropy or an
//! embedding pretraining phase (supervised contrastive / triplet) followed
//! by cross-entropy fine-tuning of the whole network.

use super::config::{Schedule, TrainConfig};
use super::history::{EpochRecord, Phase};
use super::losses::{supcon_node, triplet_node};
use super::sampler::{sample_batches, BatchMode, Batches};
use crate::autodiff::{AdamState, Graph, Tensor};
use crate::error::{Error, Result};
use crate::features::{spectral_features, statistical_features, FeatureConfig};
use crate::models::{Batch, FeatureSet, ModelSpec, NeuralNet};
use crate::parallel::{default_mode, try_map_indexed};
use crate::preprocess::Segment;
use std::collections::HashSet;

/// Result of a training run: the best-validation snapshot plus the full
/// epoch history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: NeuralNet,
    pub history: Vec<EpochRecord>,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
}

/// Per-segment features extracted once; the spectral tensor is held at
/// 32-bit (the cache precision) and widened per batch, keeping a full
/// corpus affordable in memory.
struct PrebuiltFeatures {
    needs: FeatureSet,
    steps: usize,
    channels: usize,
    scales: usize,
    labels: Vec<usize>,
    ids: Vec<u64>,
    temporal: Vec<Vec<f64>>,
    statistical: Vec<Vec<f64>>,
    spectral: Vec<Vec<f32>>,
}

impl PrebuiltFeatures {
    fn build(segments: &[&Segment], needs: FeatureSet, config: &FeatureConfig) -> Result<Self> {
        let (steps, channels) = segments
            .first()
            .map(|s| (s.data.rows(), s.data.cols()))
            .unwrap_or((0, 0));
        let scales = config.cwt_scales;
        let temporal = if needs.temporal {
            segments.iter().map(|s| s.data.data().to_vec()).collect()
        } else {
            Vec::new()
        };
        let statistical = if needs.statistical {
            segments.iter().map(|s| statistical_features(s)).collect()
        } else {
            Vec::new()
        };
        let spectral = if needs.spectral {
            try_map_indexed(segments.len(), default_mode(), |i| {
                let sp = spectral_features(segments[i], config)?;
                let mut img = vec![0.0f32; channels * scales * steps];
                for k in 0..scales {
                    for t in 0..steps {
                        for c in 0..channels {
                            img[(c * scales + k) * steps + t] = sp.get(k, t, c) as f32;
                        }
                    }
                }
                Ok::<Vec<f32>, Error>(img)
            })?
        } else {
            Vec::new()
        };
        Ok(PrebuiltFeatures {
            needs,
            steps,
            channels,
            scales,
            labels: segments.iter().map(|s| s.label.class_index).collect(),
            ids: segments.iter().map(|s| s.id).collect(),
            temporal,
            statistical,
            spectral,
        })
    }

    fn assemble(&self, indices: &[usize]) -> Batch {
        let b = indices.len();
        let temporal = self.needs.temporal.then(|| {
            let mut data = Vec::with_capacity(b * self.steps * self.channels);
            for &i in indices {
                data.extend_from_slice(&self.temporal[i]);
            }
            Tensor::new(vec![b, self.steps, self.channels], data)
        });
        let statistical = self.needs.statistical.then(|| {
            let mut data = Vec::with_capacity(b * 4 * self.channels);
            for &i in indices {
                data.extend_from_slice(&self.statistical[i]);
            }
            Tensor::new(vec![b, 4 * self.channels], data)
        });
        let spectral = self.needs.spectral.then(|| {
            let mut data = Vec::with_capacity(b * self.channels * self.scales * self.steps);
            for &i in indices {
                data.extend(self.spectral[i].iter().map(|v| *v as f64));
            }
            Tensor::new(vec![b, self.channels, self.scales, self.steps], data)
        });
        Batch {
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            temporal,
            statistical,
            spectral,
        }
    }
}

/// Trains `net` on the train split, tracking validation accuracy per epoch
/// and returning the snapshot with the best validation accuracy.
pub fn train(
    net: NeuralNet,
    train_segments: &[&Segment],
    val_segments: &[&Segment],
    feature_config: &FeatureConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_segments.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let train_ids: HashSet<u64> = train_segments.iter().map(|s| s.id).collect();
    let val_ids: HashSet<u64> = val_segments.iter().map(|s| s.id).collect();
    assert!(
        train_ids.is_disjoint(&val_ids),
        "train and validation splits share segment ids"
    );

    let needs = ModelSpec::new(net.kind).input_features();
    let features = PrebuiltFeatures::build(train_segments, needs, feature_config)?;
    let val_features = PrebuiltFeatures::build(val_segments, needs, feature_config)?;
    let val_batches: Vec<Batch> = (0..val_segments.len())
        .collect::<Vec<usize>>()
        .chunks(config.batch_size)
        .map(|chunk| val_features.assemble(chunk))
        .collect();

    let mut net = net;
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<Tensor>)> = None;
    let mut epoch_no = 0usize;

    if config.schedule.has_pretrain() {
        let mode = match config.schedule {
            Schedule::SupconThenCe => BatchMode::ClassBalanced,
            Schedule::TripletThenCe => BatchMode::Triplet,
            Schedule::CeOnly => unreachable!(),
        };
        if mode == BatchMode::ClassBalanced {
            let z = net.num_classes;
            if config.batch_size / z < 2 {
                return Err(Error::InfeasibleSampler {
                    mode: mode.to_string(),
                    why: format!(
                        "contrastive batches need 2 items per class: batch {} over {z} classes",
                        config.batch_size
                    ),
                });
            }
        }
        let mut adam = AdamState::new(&net.params, config.learning_rate);
        for _ in 0..config.epochs_pretrain {
            epoch_no += 1;
            let batches = sample_batches(
                &features.labels,
                mode,
                config.batch_size,
                config.seed,
                epoch_no as u64,
            )?;
            let train_loss = run_pretrain_epoch(
                &mut net,
                &mut adam,
                &features,
                &batches,
                config,
                epoch_no,
                &train_ids,
            )?;
            let val_accuracy = evaluate_accuracy(&net, &val_batches)?;
            history.push(EpochRecord {
                epoch: epoch_no,
                phase: Phase::Pretrain,
                train_loss,
                val_accuracy,
            });
        }
    }

    // Fresh optimizer state for the fine-tuning phase.
    let mut adam = AdamState::new(&net.params, config.learning_rate);
    for _ in 0..config.epochs_ce {
        epoch_no += 1;
        let batches = sample_batches(
            &features.labels,
            BatchMode::Plain,
            config.batch_size,
            config.seed,
            epoch_no as u64,
        )?;
        let plain = match &batches {
            Batches::Plain(b) => b,
            Batches::Triplets(_) => unreachable!("plain mode"),
        };
        let mut loss_sum = 0.0;
        let mut item_count = 0usize;
        for (bi, indices) in plain.iter().enumerate() {
            let batch = features.assemble(indices);
            assert!(
                batch.ids.iter().all(|id| train_ids.contains(id)),
                "batch leaked a non-training segment"
            );
            let mut g = Graph::new();
            let vars = net.register(&mut g, true);
            let out = net.forward(&mut g, &vars, &batch)?;
            let loss = g.softmax_cross_entropy(out.logits, &batch.labels);
            let value = g.value(loss).item();
            if !value.is_finite() {
                return Err(Error::NanLoss {
                    epoch: epoch_no,
                    batch: bi,
                    phase: Phase::Ce.to_string(),
                });
            }
            loss_sum += value * indices.len() as f64;
            item_count += indices.len();
            let mut grads = g.backward(loss)?;
            let per_param: Vec<Option<Tensor>> = vars.iter().map(|v| grads.take(*v)).collect();
            adam.step(&mut net.params, &per_param);
        }
        let train_loss = loss_sum / item_count.max(1) as f64;
        let val_accuracy = evaluate_accuracy(&net, &val_batches)?;
        history.push(EpochRecord {
            epoch: epoch_no,
            phase: Phase::Ce,
            train_loss,
            val_accuracy,
        });
        let improved = best
            .as_ref()
            .map(|(acc, _, _)| val_accuracy > *acc)
            .unwrap_or(true);
        if improved {
            best = Some((val_accuracy, epoch_no, net.params.clone()));
        }
    }

    let (best_val_accuracy, best_epoch, params) =
        best.expect("at least one cross-entropy epoch ran");
    net.params = params;
    Ok(TrainOutcome {
        model: net,
        history,
        best_val_accuracy,
        best_epoch,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_pretrain_epoch(
    net: &mut NeuralNet,
    adam: &mut AdamState,
    features: &PrebuiltFeatures,
    batches: &Batches,
    config: &TrainConfig,
    epoch: usize,
    train_ids: &HashSet<u64>,
) -> Result<f64> {
    let mut loss_sum = 0.0;
    let mut count = 0usize;
    match batches {
        Batches::Plain(plain) => {
            for (bi, indices) in plain.iter().enumerate() {
                let batch = features.assemble(indices);
                assert!(
                    batch.ids.iter().all(|id| train_ids.contains(id)),
                    "batch leaked a non-training segment"
                );
                let mut g = Graph::new();
                let vars = net.register(&mut g, true);
                let out = net.forward(&mut g, &vars, &batch)?;
                let normalized = g.l2_normalize_rows(out.embedding);
                let loss = supcon_node(&mut g, normalized, &batch.labels, config.temperature)?;
                let value = g.value(loss).item();
                if !value.is_finite() {
                    return Err(Error::NanLoss {
                        epoch,
                        batch: bi,
                        phase: Phase::Pretrain.to_string(),
                    });
                }
                loss_sum += value * indices.len() as f64;
                count += indices.len();
                let mut grads = g.backward(loss)?;
                let per_param: Vec<Option<Tensor>> = vars.iter().map(|v| grads.take(*v)).collect();
                adam.step(&mut net.params, &per_param);
            }
        }
        Batches::Triplets(triplets) => {
            for (bi, triples) in triplets.iter().enumerate() {
                let anchors: Vec<usize> = triples.iter().map(|t| t.0).collect();
                let positives: Vec<usize> = triples.iter().map(|t| t.1).collect();
                let negatives: Vec<usize> = triples.iter().map(|t| t.2).collect();
                let mut g = Graph::new();
                let vars = net.register(&mut g, true);
                let a = net.forward(&mut g, &vars, &features.assemble(&anchors))?;
                let p = net.forward(&mut g, &vars, &features.assemble(&positives))?;
                let n = net.forward(&mut g, &vars, &features.assemble(&negatives))?;
                let loss =
                    triplet_node(&mut g, a.embedding, p.embedding, n.embedding, config.triplet_margin);
                let value = g.value(loss).item();
                if !value.is_finite() {
                    return Err(Error::NanLoss {
                        epoch,
                        batch: bi,
                        phase: Phase::Pretrain.to_string(),
                    });
                }
                loss_sum += value * triples.len() as f64;
                count += triples.len();
                let mut grads = g.backward(loss)?;
                let per_param: Vec<Option<Tensor>> = vars.iter().map(|v| grads.take(*v)).collect();
                adam.step(&mut net.params, &per_param);
            }
        }
    }
    Ok(loss_sum / count.max(1) as f64)
}

fn evaluate_accuracy(net: &NeuralNet, batches: &[Batch]) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for batch in batches {
        if batch.is_empty() {
            continue;
        }
        let mut g = Graph::new();
        let vars = net.register(&mut g, false);
        let out = net.forward(&mut g, &vars, batch)?;
        let logits = g.value(out.logits);
        let z = net.num_classes;
        for (i, &label) in batch.labels.iter().enumerate() {
            let row = &logits.data()[i * z..(i + 1) * z];
            let mut pred = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[pred] {
                    pred = j;
                }
            }
            if pred == label {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    })
}
