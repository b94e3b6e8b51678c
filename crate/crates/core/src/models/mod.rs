//! The two interaction classifiers.
//!
//! Both take a pair of one-hot proteins and output an interaction probability.
//! The fully connected model flattens each protein into its own dense stack;
//! the recurrent model runs both proteins through one shared
//! convolution/pooling/LSTM stack. Both heads concatenate the two protein
//! features (protein A first) and classify with dense layers.

mod config;
mod graph;

pub use config::{FcConfig, ModelConfig, ModelKind, RecurrentConfig};
pub use graph::{
    build_fc_model, build_model, build_recurrent_model, Branch, LayerRow, ModelGraph, Scope,
    SharingGroup,
};
