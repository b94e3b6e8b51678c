//! `sppi`: build leak-checked interaction datasets, train and test the two
//! classifiers, and run saved checkpoints.

mod commands;
mod error;
mod manifest;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::dataset::{AuditArgs, BuildDatasetArgs};
use commands::synth::SynthArgs;
use commands::train::{EvaluateArgs, ExportCurvesArgs, PredictArgs, TrainArgs};
use error::CliError;

#[derive(Parser)]
#[command(name = "sppi", version, about = "Sequence-based protein-protein interaction prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest pairs, sample negatives, split, mirror and audit.
    BuildDataset(BuildDatasetArgs),
    /// Report overlap and strictness of a split directory.
    Audit(AuditArgs),
    /// Train on train.tsv, validating on validation.tsv.
    Train(TrainArgs),
    /// Pick the epoch count on validation, retrain on train + validation, test once.
    FinalTest(TrainArgs),
    /// Metrics of a checkpoint on a labelled pairs file.
    Evaluate(EvaluateArgs),
    /// Interaction probabilities for a pairs file.
    Predict(PredictArgs),
    /// Plot-ready curves from a training log.
    ExportCurves(ExportCurvesArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
}

pub(crate) fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::BuildDataset(a) => commands::dataset::build_dataset(a),
        Command::Audit(a) => commands::dataset::audit(a),
        Command::Train(a) => commands::train::train_cmd(a),
        Command::FinalTest(a) => commands::train::final_test(a),
        Command::Evaluate(a) => commands::train::evaluate_cmd(a),
        Command::Predict(a) => commands::train::predict_cmd(a),
        Command::ExportCurves(a) => commands::train::export_curves(a),
        Command::Synth(a) => commands::synth::synth(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
