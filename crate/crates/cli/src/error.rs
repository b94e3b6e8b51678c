use std::fmt;

use sppi_core::dataset::DatasetError;
use sppi_core::seq_encoding::EncodingError;
use sppi_core::training::{CheckpointError, TrainingError};

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_CHECKPOINT: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(EXIT_DATA, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(EXIT_INTERNAL, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::usage(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => Self::usage(e.to_string()),
            DatasetError::InvalidRatios(_) => Self::usage(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<EncodingError> for CliError {
    fn from(e: EncodingError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::IoFailure(_) => Self::usage(e.to_string()),
            _ => Self::new(EXIT_CHECKPOINT, e.to_string()),
        }
    }
}

impl From<TrainingError> for CliError {
    fn from(e: TrainingError) -> Self {
        match e {
            TrainingError::Checkpoint(c) => c.into(),
            TrainingError::Encoding(c) => c.into(),
            TrainingError::EmptyDataset => Self::data(e.to_string()),
            TrainingError::InvalidConfig(_) => Self::usage(e.to_string()),
            TrainingError::NonFinite { .. } | TrainingError::Nn(_) => Self::internal(e.to_string()),
        }
    }
}

impl From<sppi_core::nn::NnError> for CliError {
    fn from(e: sppi_core::nn::NnError) -> Self {
        Self::usage(format!("model configuration: {e}"))
    }
}
