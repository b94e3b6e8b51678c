//! Loss, optimizer, learning-rate schedule, the training loop, evaluation and
//! checkpoints.

mod adam;
mod checkpoint;
mod data;
mod loss;
mod metrics;
mod schedule;
mod trainer;

use thiserror::Error;

use crate::nn::NnError;
use crate::seq_encoding::EncodingError;

pub use adam::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use checkpoint::{
    from_bytes, load_checkpoint, load_checkpoint_as, save_checkpoint, to_bytes, CheckpointError,
    FORMAT_VERSION, MAGIC,
};
pub use data::EncodedDataset;
pub use loss::{bce_loss, bce_per_sample, BCE_EPSILON};
pub use metrics::{sweep_csv, threshold_sweep, MetricsReport, SweepPoint, DEFAULT_THRESHOLD};
pub use schedule::{plateau_schedule, plateau_schedule_with, reduce_lr, PlateauScheduler};
pub use trainer::{
    evaluate, evaluate_loss, predict, retrain_final, retrain_final_with, train, train_with,
    Checkpoint, EpochRecord, TrainOutcome, TrainingConfig, TrainingLog, INFER_CHUNK, LOG_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainingError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss in epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
