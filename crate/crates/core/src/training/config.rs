//! Training schedule configuration.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn default_lr() -> f64 {
    0.001
}
fn default_epochs_ce() -> usize {
    50
}
fn default_epochs_pretrain() -> usize {
    10
}
fn default_batch() -> usize {
    64
}
fn default_tau() -> f64 {
    0.07
}
fn default_margin() -> f64 {
    1.0
}

/// Which losses drive the run: plain cross-entropy, or an embedding
/// pretraining phase followed by cross-entropy fine-tuning of the whole
/// network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    CeOnly,
    SupconThenCe,
    TripletThenCe,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::CeOnly => "ce_only",
            Schedule::SupconThenCe => "supcon_then_ce",
            Schedule::TripletThenCe => "triplet_then_ce",
        }
    }

    pub fn has_pretrain(self) -> bool {
        !matches!(self, Schedule::CeOnly)
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "ce" | "ce_only" => Ok(Schedule::CeOnly),
            "supcon" | "supcon_then_ce" => Ok(Schedule::SupconThenCe),
            "triplet" | "triplet_then_ce" => Ok(Schedule::TripletThenCe),
            other => Err(Error::Config(format!("unknown schedule {other:?}"))),
        }
    }
}

/// Optimizer and schedule parameters. "Iterations" in the protocol are
/// read as full epochs; 50 gradient steps cannot train these models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs_ce")]
    pub epochs_ce: usize,
    #[serde(default = "default_epochs_pretrain")]
    pub epochs_pretrain: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Supervised-contrastive temperature τ.
    #[serde(default = "default_tau")]
    pub temperature: f64,
    /// Triplet margin m under Euclidean distance on raw 128-d embeddings.
    #[serde(default = "default_margin")]
    pub triplet_margin: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_lr(),
            epochs_ce: default_epochs_ce(),
            epochs_pretrain: default_epochs_pretrain(),
            batch_size: default_batch(),
            temperature: default_tau(),
            triplet_margin: default_margin(),
            seed: 0,
            schedule: Schedule::CeOnly,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature <= 0.0 {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if self.triplet_margin < 0.0 {
            return Err(Error::Config("triplet margin must be non-negative".into()));
        }
        if self.epochs_ce < 1 || (self.schedule.has_pretrain() && self.epochs_pretrain < 1) {
            return Err(Error::Config("epoch counts must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let c = TrainConfig::default();
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.epochs_ce, 50);
        assert_eq!(c.epochs_pretrain, 10);
        assert_eq!(c.temperature, 0.07);
        assert_eq!(c.batch_size, 64);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn schedule_parses_short_names() {
        assert_eq!("ce".parse::<Schedule>().unwrap(), Schedule::CeOnly);
        assert_eq!("supcon".parse::<Schedule>().unwrap(), Schedule::SupconThenCe);
        assert_eq!("triplet".parse::<Schedule>().unwrap(), Schedule::TripletThenCe);
        assert!("adversarial".parse::<Schedule>().is_err());
    }

    #[test]
    fn bad_temperature_is_rejected() {
        let cfg = TrainConfig {
            temperature: 0.0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
