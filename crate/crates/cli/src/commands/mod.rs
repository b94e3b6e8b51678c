pub mod dataset;
pub mod synth;
pub mod train;
