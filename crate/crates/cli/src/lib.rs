//! Command-line surface: synth, train, predict, evaluate, compare, bench.

pub mod commands;
pub mod report;

use clap::{Parser, Subcommand};

use gpscore::Error;

/// Exit code for invalid inputs or flags.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for numeric failures (factorization, undefined statistics).
pub const EXIT_NUMERIC: i32 = 3;
/// Exit code for filesystem problems.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "gpscore",
    version,
    about = "Gaussian process regression over multi-rater scores: train, predict, evaluate, compare, benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic multi-rater dataset pair plus a truth sidecar.
    Synth(commands::synth::SynthArgs),
    /// Optimize hyperparameters on a dataset and write a model file.
    Train(commands::train::TrainArgs),
    /// Predict means, variances and discretized score distributions.
    Predict(commands::predict::PredictArgs),
    /// Score predictions against the rater references (PCC, MSE, KL).
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Significance tests between two prediction sets on the same data.
    Compare(commands::compare::CompareArgs),
    /// Time inference across an (N, R, variant) grid.
    Bench(commands::bench::BenchArgs),
}

pub fn run(cli: Cli) -> gpscore::Result<()> {
    match cli.command {
        Command::Synth(args) => commands::synth::run(&args),
        Command::Train(args) => commands::train::run(&args),
        Command::Predict(args) => commands::predict::run(&args),
        Command::Evaluate(args) => commands::evaluate::run(&args),
        Command::Compare(args) => commands::compare::run(&args),
        Command::Bench(args) => commands::bench::run(&args),
    }
}

/// Maps library errors onto the documented exit codes.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invalid(_) | Error::Shape(_) | Error::Csv(_) | Error::Json(_) => EXIT_VALIDATION,
        Error::NotPositiveDefinite { .. } | Error::Numeric(_) => EXIT_NUMERIC,
        Error::Io(_) => EXIT_IO,
    }
}
