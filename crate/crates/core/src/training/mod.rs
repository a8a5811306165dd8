//! The three loss functions, the batch samplers they require, and the
//! train / pretrain-then-finetune schedules.

mod config;
mod history;
mod losses;
mod sampler;
mod trainer;

pub use config::{Schedule, TrainConfig};
pub use history::{write_history_csv, EpochRecord, Phase};
pub use losses::{
    ce_loss, supcon_loss, supcon_node, triplet_loss, triplet_node, LossValue,
};
pub use sampler::{sample_batches, BatchMode, Batches};
pub use trainer::{train, TrainOutcome};
