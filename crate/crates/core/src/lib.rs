//! Sequence-based protein-protein interaction prediction.
//!
//! - [`seq_encoding`]: the 24-symbol residue alphabet and padded one-hot encoding.
//! - [`dataset`]: pair ingestion, negative sampling, regular and strict splits,
//!   mirror augmentation and leak auditing.
//! - [`nn`]: the layer library with reverse-mode gradients.
//! - [`models`]: the fully connected and the convolution + LSTM classifiers.
//! - [`training`]: loss, Adam, plateau schedule, training loop, metrics and
//!   checkpoints.

pub mod dataset;
pub mod models;
pub mod nn;
pub mod rng;
pub mod seq_encoding;
pub mod synthetic;
pub mod training;
