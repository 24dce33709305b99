//! Command-line front end: corrupt volumes, build datasets, score
//! trajectories, run the thickness-bias analysis and train the small network.

mod analyze;
mod corrupt;
mod dataset;
mod error;
mod manifest;
mod score;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "kmotion", version, about = "Synthetic MRI motion artifacts and motion-score tools")]
struct Cli {
    /// Run manifest path. Commands with outputs default to a file beside
    /// them; `score` and `predict` write one only when this is given.
    #[arg(long, global = true)]
    run_manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corrupt one NIfTI volume to a target motion score.
    Corrupt(corrupt::CorruptArgs),
    /// Corrupt every volume in a directory K times and write a manifest.
    Dataset(dataset::DatasetArgs),
    /// Print the motion score of a trajectory JSON file.
    Score(score::ScoreArgs),
    /// Per-structure thickness ~ age + sex + motion fits with FDR correction.
    Analyze(analyze::AnalyzeArgs),
    /// Train the small network from a JSON config.
    TrainToy(train::TrainArgs),
    /// Predict motion scores with a trained checkpoint.
    Predict(train::PredictArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let m = cli.run_manifest.as_deref();
    let result = match &cli.command {
        Command::Corrupt(a) => corrupt::run(a, m),
        Command::Dataset(a) => dataset::run(a, m),
        Command::Score(a) => score::run(a, m),
        Command::Analyze(a) => analyze::run(a, m),
        Command::TrainToy(a) => train::run_train(a, m),
        Command::Predict(a) => train::run_predict(a, m),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
