//! Command-line surface for the weightsteg toolkit.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad input (usage, file
//! formats), 3 payload exceeds capacity, 4 extraction digest mismatch.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;
pub const EXIT_SHA_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(
    name = "weightsteg",
    about = "Hide, recover, measure, and destroy binary payloads in float32 model files",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Payload capacity of a model's tensors under a method
    Capacity(CapacityArgs),
    /// Embed a payload file into a model, writing the new model and manifest
    Embed(EmbedArgs),
    /// Recover a payload using a manifest and verify its digest
    Extract(ExtractArgs),
    /// Byte-entropy report over model files, optionally baseline-normalized
    Entropy(EntropyArgs),
    /// Per-tensor overlap rates between a model and a known payload
    Detect(DetectArgs),
    /// Overwrite low parameter bytes to destroy any embedded payload
    Sanitize(SanitizeArgs),
    /// Score embedding methods from a CSV of measurement cells
    Evaluate(EvaluateArgs),
    /// Train the deterministic MLP and save it as a model container
    Train(TrainArgs),
    /// Neuron-replacement sweep: accuracy per (layer, count) grid point
    Sweep(SweepArgs),
    /// Retrain a checkpoint with chosen layers frozen
    Retrain(RetrainArgs),
    /// Feed feature vectors through the match-counter trigger
    TriggerSim(TriggerSimArgs),
    /// End-to-end walkthrough: train, embed, sweep, retrain, detect,
    /// sanitize, trigger
    Demo(DemoArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Capacity(args) => run_capacity(args),
        Command::Embed(args) => run_embed(args),
        Command::Extract(args) => run_extract(args),
        Command::Entropy(args) => run_entropy(args),
        Command::Detect(args) => run_detect(args),
        Command::Sanitize(args) => run_sanitize(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Train(args) => run_train(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Retrain(args) => run_retrain(args),
        Command::TriggerSim(args) => run_trigger_sim(args),
        Command::Demo(args) => run_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
