//! Per-epoch training history and its CSV form.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pretrain,
    Ce,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Pretrain => write!(f, "pretrain"),
            Phase::Ce => write!(f, "ce"),
        }
    }
}

/// One row per epoch: epoch, phase, train loss, validation accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut out = String::from("epoch,phase,train_loss,val_accuracy\n");
    for rec in history {
        let _ = writeln!(
            out,
            "{},{},{:.12},{:.12}",
            rec.epoch, rec.phase, rec.train_loss, rec.val_accuracy
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
