//! Accuracy comparison tables across runs and schedules, with optional
//! published reference values alongside.

use super::report::{ExperimentReport, ModelOutcome};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use std::fmt::Write as _;

/// Published cross-entropy accuracies for the two corpora (fractions).
const REFERENCE_CE: [(ModelKind, f64, f64); 16] = [
    (ModelKind::Svm, 0.779, 0.569),
    (ModelKind::Knn, 0.935, 0.798),
    (ModelKind::Gbdt, 0.892, 0.784),
    (ModelKind::Lr, 0.763, 0.555),
    (ModelKind::Dt, 0.874, 0.759),
    (ModelKind::Rf, 0.929, 0.850),
    (ModelKind::Adaboost, 0.446, 0.683),
    (ModelKind::GaussianNb, 0.781, 0.538),
    (ModelKind::Mlp, 0.775, 0.603),
    (ModelKind::Resnet, 0.954, 0.535),
    (ModelKind::Transformer, 0.878, 0.840),
    (ModelKind::Lstm, 0.953, 0.873),
    (ModelKind::Bilstm, 0.954, 0.874),
    (ModelKind::LstmAttention, 0.931, 0.870),
    (ModelKind::Cnn1d, 0.939, 0.828),
    (ModelKind::Mrnet, 0.970, 0.552),
];

/// Published DS1 cross-entropy accuracy for `kind`.
pub fn paper_reference(kind: ModelKind) -> f64 {
    REFERENCE_CE
        .iter()
        .find(|(k, _, _)| *k == kind)
        .map(|(_, ds1, _)| *ds1)
        .expect("every kind has a reference")
}

/// Model × (run, schedule) accuracy grid.
#[derive(Debug, Clone)]
pub struct Table {
    /// Column headers: `name/schedule`.
    pub columns: Vec<String>,
    pub kinds: Vec<ModelKind>,
    /// `values[row][col]`; `None` for failed or absent entries.
    pub values: Vec<Vec<Option<f64>>>,
    pub include_reference: bool,
}

/// Merges reports into one grid. Reports must share the table digest
/// (same corpus, preprocessing, features and split); schedule and model
/// lists may differ.
pub fn emit_table(reports: &[&ExperimentReport], include_reference: bool) -> Result<Table> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("no reports to tabulate".into()))?;
    for other in &reports[1..] {
        if other.table_digest != first.table_digest {
            return Err(Error::ReportMergeConflict {
                field: "table_digest".into(),
                left: first.table_digest.clone(),
                right: other.table_digest.clone(),
            });
        }
    }
    let mut kinds: Vec<ModelKind> = Vec::new();
    for kind in ModelKind::ALL {
        if reports.iter().any(|r| r.model(kind).is_some()) {
            kinds.push(kind);
        }
    }
    let columns: Vec<String> = reports
        .iter()
        .map(|r| {
            let schedule = r
                .models
                .iter()
                .map(|m| m.schedule)
                .find(|s| *s != crate::training::Schedule::CeOnly)
                .unwrap_or(crate::training::Schedule::CeOnly);
            format!("{}/{}", r.name, schedule)
        })
        .collect();
    let values = kinds
        .iter()
        .map(|&kind| {
            reports
                .iter()
                .map(|r| {
                    r.model(kind).and_then(|m| match m.outcome {
                        ModelOutcome::Ok => m.test_accuracy,
                        ModelOutcome::Failed { .. } => None,
                    })
                })
                .collect()
        })
        .collect();
    Ok(Table {
        columns,
        kinds,
        values,
        include_reference,
    })
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::from("model");
    for c in &table.columns {
        let _ = write!(out, ",{c}");
    }
    if table.include_reference {
        out.push_str(",reference_ds1");
    }
    out.push('\n');
    for (row, kind) in table.kinds.iter().enumerate() {
        let _ = write!(out, "{kind}");
        for v in &table.values[row] {
            match v {
                Some(a) => {
                    let _ = write!(out, ",{a:.4}");
                }
                None => out.push_str(",failed"),
            }
        }
        if table.include_reference {
            let _ = write!(out, ",{:.3}", paper_reference(*kind));
        }
        out.push('\n');
    }
    out
}

pub fn render_text(table: &Table) -> String {
    let mut headers = vec!["model".to_string()];
    headers.extend(table.columns.clone());
    if table.include_reference {
        headers.push("reference_ds1".into());
    }
    let mut rows: Vec<Vec<String>> = vec![headers];
    for (row, kind) in table.kinds.iter().enumerate() {
        let mut cells = vec![kind.to_string()];
        for v in &table.values[row] {
            cells.push(match v {
                Some(a) => format!("{a:.4}"),
                None => "failed".into(),
            });
        }
        if table.include_reference {
            cells.push(format!("{:.3}", paper_reference(*kind)));
        }
        rows.push(cells);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:<width$}", width = widths[c]);
        }
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetManifest, SplitStrategy};
    use crate::harness::report::{CorpusSummary, ModelReport, SplitSummary};
    use crate::harness::provenance;
    use crate::training::Schedule;

    fn report(name: &str, digest: &str, acc: f64) -> ExperimentReport {
        ExperimentReport {
            name: name.into(),
            tool_version: "0".into(),
            started_at: String::new(),
            config_digest: "x".into(),
            table_digest: digest.into(),
            corpus_digest: "y".into(),
            seed: 0,
            manifest: DatasetManifest {
                name: "m".into(),
                num_classes: 6,
                class_names: (0..6).map(|i| format!("c{i}")).collect(),
                channel_names: vec!["a".into()],
                sampling_note: String::new(),
                source_files: vec![],
            },
            corpus: CorpusSummary {
                recordings: 0,
                segments: 0,
                malformed_lines: 0,
                published_record_count: None,
            },
            split: SplitSummary {
                strategy: SplitStrategy::SegmentStratified,
                seed: 0,
                train: 0,
                val: 0,
                test: 0,
            },
            decisions: provenance::all_decisions(),
            models: vec![ModelReport {
                kind: ModelKind::Knn,
                schedule: Schedule::CeOnly,
                outcome: ModelOutcome::Ok,
                test_accuracy: Some(acc),
                confusion: None,
                fit_seconds: 0.0,
                eval_seconds: 0.0,
                best_val_accuracy: None,
                best_epoch: None,
                history: vec![],
                history_path: None,
                checkpoint_path: None,
                trainable_parameters: 0,
            }],
        }
    }

    #[test]
    fn single_report_renders_one_column() {
        let r = report("run", "d1", 0.93);
        let table = emit_table(&[&r], true).unwrap();
        assert_eq!(table.columns, vec!["run/ce_only"]);
        let csv = render_csv(&table);
        assert!(csv.contains("knn,0.9300,0.935"));
        let text = render_text(&table);
        assert!(text.contains("knn"));
        assert!(text.lines().count() >= 3);
    }

    #[test]
    fn conflicting_table_digests_are_refused() {
        let a = report("a", "d1", 0.9);
        let b = report("b", "d2", 0.8);
        match emit_table(&[&a, &b], false) {
            Err(Error::ReportMergeConflict { left, right, .. }) => {
                assert_eq!(left, "d1");
                assert_eq!(right, "d2");
            }
            other => panic!("expected merge conflict, got {other:?}"),
        }
    }

    #[test]
    fn reference_table_is_complete() {
        for kind in ModelKind::ALL {
            let v = paper_reference(kind);
            assert!(v > 0.0 && v < 1.0);
        }
        assert_eq!(paper_reference(ModelKind::Bilstm), 0.954);
        assert_eq!(paper_reference(ModelKind::Mrnet), 0.970);
    }
}
