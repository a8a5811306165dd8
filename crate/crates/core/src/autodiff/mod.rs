//! Reverse-mode automatic differentiation core.
//!
//! A [`Graph`] records eager forward computations on [`Tensor`] values and
//! replays them backward to produce gradients. Everything is 64-bit; the
//! desk-scale model zoo trades speed for debuggable precision.

pub mod adam;
pub mod checkpoint;
pub mod graph;
pub mod init;
pub mod kernels;
pub mod lstm;
pub mod tensor;

pub use adam::AdamState;
pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;
