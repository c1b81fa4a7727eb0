//! A single-layer convolutional model for joint intent detection and slot
//! filling, with structured filter pruning, knowledge distillation and a
//! batch-1 CPU latency harness.
//!
//! The crate is organised bottom-up: [`tensor`] holds the kernels and a
//! small reverse-mode tape, [`model`] the network and its training loop,
//! [`pruning`] and [`distill`] the two compression routes, [`metrics`]
//! the scorers, and [`bench`] the latency measurement. [`cli`] wires them
//! into the `cnlu` binary.

pub mod bench;
pub mod cli;
pub mod data;
pub mod distill;
pub mod error;
pub mod metrics;
pub mod model;
pub mod pruning;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{JointModel, ModelConfig, TaskMode};
pub use tensor::Tensor;
