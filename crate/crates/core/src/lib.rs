//! Joint source-channel coding over a binary symmetric channel, trained as a
//! stochastic binary autoencoder with an information-bottleneck objective.
//!
//! The pipeline is: encoder network -> Bernoulli code sampling -> bit-flip
//! channel -> decoder network. Training maximizes a multi-sample importance
//! -weighted reconstruction bound while penalizing code-input mutual
//! information through a contrastive upper bound, with the trade-off weight
//! adapted each epoch by a bounded PID rule driven by validation error.

pub mod autodiff;
pub mod channel;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod info;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod optim;
pub mod oracle;
pub mod pid;
pub mod rng;
pub mod selftest;
pub mod sscc;
pub mod trainer;

pub use autodiff::{grad_check, Graph, NodeId, Tensor};
pub use data::Dataset;
pub use error::{Error, Result};
