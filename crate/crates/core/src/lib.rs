//! Workbench for sensor-based human activity recognition.
//!
//! The crate covers the full pipeline: raw corpus ingestion ([`dataset`]),
//! windowing / smoothing / normalization ([`preprocess`]), temporal,
//! statistical and wavelet-spectral representations ([`features`]), a
//! reverse-mode autodiff core ([`autodiff`]), sixteen classifier
//! configurations ([`models`]), three training regimes ([`training`]) and a
//! config-driven experiment runner ([`harness`]).
//!
//! Hot inner loops (wavelet transforms, matrix products, convolutions,
//! neighbor search, batched evaluation) run on rayon when the default
//! `parallel` feature is enabled and fall back to identical sequential code
//! otherwise. Both paths produce bit-identical results; `benches/kernels.rs`
//! compares their throughput.

pub mod autodiff;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod mat;
pub mod models;
pub mod parallel;
pub mod preprocess;
pub mod training;

pub use error::{Error, Result};
pub use mat::Mat;

/// Version string embedded in reports for provenance.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Derives a sub-seed from a master seed and a purpose tag.
///
/// Every randomized stage (splits, initialization, batch order, samplers)
/// draws its own stream so that adding a stage never perturbs the others.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}
