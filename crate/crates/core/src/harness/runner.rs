//! Experiment execution: corpus → segments → split → per-model fit/train →
//! test evaluation → report.

use super::config::{hex, DatasetKind, ExperimentConfig};
use super::confusion::{accuracy_from_confusion, confusion_matrix, write_confusion_csv};
use super::provenance;
use super::report::{
    save_report, CorpusSummary, ExperimentReport, ModelOutcome, ModelReport, SplitSummary,
};
use crate::dataset::{
    load_generic_csv, load_wisdm, stratified_split, synth_generate, DatasetManifest, Ingest,
    IngestStats, SplitAssignment, SplitItem, SplitStrategy, DEFAULT_RATIOS,
};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::models::{
    build, save_classical, Model, ModelKind, ModelSpec, FeatureShapes,
};
use crate::preprocess::{normalize_segments, segment_and_smooth, Segment};
use crate::training::{train, write_history_csv, Schedule};
use crate::mat::Mat;
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Published segment count for the WISDM corpus, reported alongside ours.
const WISDM_PUBLISHED_RECORDS: usize = 7498;

/// CLI-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub models: Option<Vec<ModelKind>>,
    pub schedule: Option<Schedule>,
    pub seed: Option<u64>,
    pub split: Option<SplitStrategy>,
    pub out: Option<PathBuf>,
}

impl RunOverrides {
    /// Resolves a final config; returns the output directory as well.
    pub fn apply(&self, mut config: ExperimentConfig) -> Result<(ExperimentConfig, PathBuf)> {
        if let Some(models) = &self.models {
            config.models = models.iter().map(|k| k.name().to_string()).collect();
        }
        if let Some(schedule) = self.schedule {
            config.training.schedule = schedule;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
            config.split.seed = None;
        }
        if let Some(split) = self.split {
            config.split.strategy = split;
        }
        let out = self
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .ok_or_else(|| Error::Config("no output directory (set output_dir or --out)".into()))?;
        config.validate()?;
        Ok((config, out))
    }
}

/// Loads the configured corpus and returns its manifest, recordings and
/// content digest.
pub fn load_corpus(config: &ExperimentConfig) -> Result<(DatasetManifest, Ingest, [u8; 32])> {
    match config.dataset.kind {
        DatasetKind::Synth => {
            let spec = config
                .dataset
                .synth
                .as_ref()
                .ok_or_else(|| Error::Config("missing [dataset.synth]".into()))?;
            let manifest = spec.manifest();
            let recordings = synth_generate(spec);
            let digest: [u8; 32] =
                Sha256::digest(serde_json::to_vec(spec).expect("synth spec serializes")).into();
            let stats = IngestStats {
                total_lines: 0,
                malformed_lines: 0,
                recordings: recordings.len(),
            };
            Ok((
                manifest,
                Ingest {
                    recordings,
                    stats,
                },
                digest,
            ))
        }
        DatasetKind::Wisdm | DatasetKind::GenericCsv => {
            let path = config.dataset.path.as_ref().expect("validated");
            let manifest_path = config.dataset.manifest.as_ref().expect("validated");
            let manifest = DatasetManifest::load(manifest_path)?;
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let digest: [u8; 32] = Sha256::digest(&bytes).into();
            let ingest = match config.dataset.kind {
                DatasetKind::Wisdm => load_wisdm(path, &manifest)?,
                _ => load_generic_csv(path, &manifest)?,
            };
            Ok((manifest, ingest, digest))
        }
    }
}

/// Prepared splits ready for model runs.
pub(crate) struct PreparedData {
    pub manifest: DatasetManifest,
    pub segments: Vec<Segment>,
    pub assignment: SplitAssignment,
    pub shapes: FeatureShapes,
    pub corpus_digest: [u8; 32],
    pub stats: IngestStats,
}

pub(crate) fn prepare(config: &ExperimentConfig) -> Result<PreparedData> {
    let (manifest, ingest, corpus_digest) = load_corpus(config)?;
    let segments = segment_and_smooth(&ingest.recordings, &config.preprocess)?;
    if segments.is_empty() {
        return Err(Error::Config(
            "preprocessing produced no segments (recordings shorter than the window?)".into(),
        ));
    }
    let items: Vec<SplitItem> = segments
        .iter()
        .map(|s| SplitItem {
            id: s.id,
            class_index: s.label.class_index,
            user_id: s.user_id,
        })
        .collect();
    let assignment = stratified_split(
        &items,
        DEFAULT_RATIOS,
        config.split_seed(),
        config.split.strategy,
        &manifest.class_names,
    )?;
    let train_ids: HashSet<u64> = assignment.train.iter().copied().collect();
    let (segments, _stats) =
        normalize_segments(segments, Some(&train_ids), &manifest.channel_names)?;
    let shapes = FeatureShapes {
        steps: config.preprocess.window_size,
        channels: manifest.channel_names.len(),
        scales: config.features.cwt_scales,
    };
    Ok(PreparedData {
        manifest,
        segments,
        assignment,
        shapes,
        corpus_digest,
        stats: ingest.stats,
    })
}

fn segment_refs<'a>(segments: &'a [Segment], ids: &[u64]) -> Vec<&'a Segment> {
    let by_id: std::collections::HashMap<u64, &Segment> =
        segments.iter().map(|s| (s.id, s)).collect();
    ids.iter().map(|id| by_id[id]).collect()
}

/// Runs every configured model through the full pipeline and writes the
/// report plus per-model artifacts into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let started_at = now_utc();
    let prepared = prepare(config)?;
    let kinds = config.model_kinds()?;

    let train_set = segment_refs(&prepared.segments, &prepared.assignment.train);
    let val_set = segment_refs(&prepared.segments, &prepared.assignment.val);
    let test_set = segment_refs(&prepared.segments, &prepared.assignment.test);

    let mut models = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let result = run_one_model(kind, config, &prepared, &train_set, &val_set, &test_set, out_dir);
        match result {
            Ok(report) => models.push(report),
            Err(e) => models.push(ModelReport {
                kind,
                schedule: effective_schedule(kind, config),
                outcome: ModelOutcome::Failed {
                    error: e.to_string(),
                },
                test_accuracy: None,
                confusion: None,
                fit_seconds: 0.0,
                eval_seconds: 0.0,
                best_val_accuracy: None,
                best_epoch: None,
                history: vec![],
                history_path: None,
                checkpoint_path: None,
                trainable_parameters: 0,
            }),
        }
    }
    let failed = models
        .iter()
        .filter(|m| matches!(m.outcome, ModelOutcome::Failed { .. }))
        .count();
    if failed == models.len() {
        return Err(Error::AllModelsFailed(failed));
    }

    let report = ExperimentReport {
        name: config.name.clone(),
        tool_version: crate::TOOL_VERSION.into(),
        started_at,
        config_digest: hex(&config.digest()),
        table_digest: hex(&config.table_digest()),
        corpus_digest: hex(&prepared.corpus_digest),
        seed: config.seed,
        manifest: prepared.manifest.clone(),
        corpus: CorpusSummary {
            recordings: prepared.stats.recordings,
            segments: prepared.segments.len(),
            malformed_lines: prepared.stats.malformed_lines,
            published_record_count: (config.dataset.kind == DatasetKind::Wisdm)
                .then_some(WISDM_PUBLISHED_RECORDS),
        },
        split: SplitSummary {
            strategy: prepared.assignment.strategy,
            seed: prepared.assignment.seed,
            train: prepared.assignment.train.len(),
            val: prepared.assignment.val.len(),
            test: prepared.assignment.test.len(),
        },
        decisions: provenance::all_decisions(),
        models,
    };
    save_report(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Classical kinds always train with plain cross-entropy semantics; the
/// pretraining schedules apply to the neural architectures.
fn effective_schedule(kind: ModelKind, config: &ExperimentConfig) -> Schedule {
    if kind.is_neural() {
        config.training.schedule
    } else {
        Schedule::CeOnly
    }
}

#[allow(clippy::too_many_arguments)]
fn run_one_model(
    kind: ModelKind,
    config: &ExperimentConfig,
    prepared: &PreparedData,
    train_set: &[&Segment],
    val_set: &[&Segment],
    test_set: &[&Segment],
    out_dir: &Path,
) -> Result<ModelReport> {
    let mut spec = ModelSpec::new(kind);
    spec.num_classes = prepared.manifest.num_classes;
    let model_seed = derive_seed(config.seed, &format!("model-{kind}"));
    let mut model = build(&spec, prepared.shapes, model_seed);
    let schedule = effective_schedule(kind, config);

    let fit_start = Instant::now();
    let mut history = Vec::new();
    let mut best_val_accuracy = None;
    let mut best_epoch = None;
    let mut history_path = None;
    // Artifact paths are stored relative to the report's directory so
    // reports stay relocatable.
    let checkpoint_path;

    match &mut model {
        Model::Classical(classical) => {
            let (x, y) = statistical_matrix(train_set);
            classical.fit(&x, &y)?;
            let name = format!("{kind}.model.json");
            save_classical(&out_dir.join(&name), classical)?;
            checkpoint_path = Some(name);
        }
        Model::Neural(net) => {
            let mut train_config = config.training.clone();
            train_config.schedule = schedule;
            train_config.seed = derive_seed(config.seed, &format!("train-{kind}"));
            let outcome = train(
                net.clone(),
                train_set,
                val_set,
                &config.features,
                &train_config,
            )?;
            history = outcome.history.clone();
            best_val_accuracy = Some(outcome.best_val_accuracy);
            best_epoch = Some(outcome.best_epoch);
            let hname = format!("{kind}.history.csv");
            write_history_csv(&out_dir.join(&hname), &outcome.history)?;
            history_path = Some(hname);
            let cname = format!("{kind}.ckpt");
            crate::autodiff::checkpoint::save(
                &out_dir.join(&cname),
                &outcome.model.names,
                &outcome.model.params,
                &config.digest(),
            )?;
            checkpoint_path = Some(cname);
            *net = outcome.model;
        }
    }
    let fit_seconds = fit_start.elapsed().as_secs_f64();

    // The one test-split evaluation for this model.
    let eval_start = Instant::now();
    let needs = spec.input_features();
    let outputs = model.predict_segments(
        test_set,
        needs,
        &config.features,
        config.training.batch_size.max(64),
    )?;
    let predictions: Vec<usize> = outputs.iter().map(|o| o.predicted()).collect();
    let labels: Vec<usize> = test_set.iter().map(|s| s.label.class_index).collect();
    let confusion = confusion_matrix(&predictions, &labels, spec.num_classes)?;
    let accuracy = accuracy_from_confusion(&confusion);
    let eval_seconds = eval_start.elapsed().as_secs_f64();
    write_confusion_csv(
        &out_dir.join(format!("{kind}.confusion.csv")),
        &confusion,
        &prepared.manifest.class_names,
    )?;

    Ok(ModelReport {
        kind,
        schedule,
        outcome: ModelOutcome::Ok,
        test_accuracy: Some(accuracy),
        confusion: Some(confusion),
        fit_seconds,
        eval_seconds,
        best_val_accuracy,
        best_epoch,
        history,
        history_path,
        checkpoint_path,
        trainable_parameters: model.trainable_parameters(),
    })
}

/// Runs the preprocessing stages and persists the segment cache, split
/// assignment and normalization stats. Returns (total, train, val, test)
/// segment counts.
pub fn preprocess_to_dir(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(usize, usize, usize, usize)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let prepared = prepare(config)?;
    let config_digest = config.digest();
    crate::preprocess::save_segment_cache(
        &out_dir.join("segments.bin"),
        &prepared.segments,
        &prepared.manifest.class_names,
        &prepared.corpus_digest,
        &config_digest,
    )?;
    let split_json = serde_json::to_string_pretty(&prepared.assignment)
        .map_err(|e| Error::Other(e.to_string()))?;
    std::fs::write(out_dir.join("split.json"), split_json)
        .map_err(|e| Error::io(out_dir, e))?;
    prepared.manifest.save(&out_dir.join("manifest.toml"))?;
    Ok((
        prepared.segments.len(),
        prepared.assignment.train.len(),
        prepared.assignment.val.len(),
        prepared.assignment.test.len(),
    ))
}

/// Re-evaluates a saved model on the config's test split. The checkpoint's
/// stored config digest must match the current config for neural models.
pub fn evaluate_checkpoint(
    config: &ExperimentConfig,
    kind: ModelKind,
    checkpoint: &Path,
) -> Result<(f64, Vec<Vec<u64>>, Vec<String>)> {
    let prepared = prepare(config)?;
    let test_set = segment_refs(&prepared.segments, &prepared.assignment.test);
    let mut spec = ModelSpec::new(kind);
    spec.num_classes = prepared.manifest.num_classes;
    let model = if kind.is_classical() {
        let loaded = crate::models::load_classical(checkpoint)?;
        if loaded.kind != kind {
            return Err(Error::BadFormat {
                path: checkpoint.to_path_buf(),
                why: format!("checkpoint holds a {} model, not {kind}", loaded.kind),
            });
        }
        Model::Classical(loaded)
    } else {
        let (net, digest) = crate::models::load_neural_checkpoint(checkpoint, &spec, prepared.shapes)?;
        if digest != config.digest() {
            return Err(Error::CacheKey(format!(
                "checkpoint was trained under config {}, current config is {}",
                hex(&digest),
                hex(&config.digest())
            )));
        }
        Model::Neural(net)
    };
    let outputs = model.predict_segments(
        &test_set,
        spec.input_features(),
        &config.features,
        config.training.batch_size.max(64),
    )?;
    let predictions: Vec<usize> = outputs.iter().map(|o| o.predicted()).collect();
    let labels: Vec<usize> = test_set.iter().map(|s| s.label.class_index).collect();
    let confusion = confusion_matrix(&predictions, &labels, spec.num_classes)?;
    let accuracy = accuracy_from_confusion(&confusion);
    Ok((accuracy, confusion, prepared.manifest.class_names.clone()))
}

/// Statistical feature matrix plus labels for the classical kinds.
pub(crate) fn statistical_matrix(segments: &[&Segment]) -> (Mat, Vec<usize>) {
    let rows: Vec<Vec<f64>> = segments
        .iter()
        .map(|s| crate::features::statistical_features(s))
        .collect();
    let labels = segments.iter().map(|s| s.label.class_index).collect();
    (Mat::from_rows(&rows), labels)
}

fn now_utc() -> String {
    // Seconds since the epoch; enough provenance without a clock dependency.
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}
