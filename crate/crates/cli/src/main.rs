//! `bsng`: validate, profile, encode, audit, train, predict, evaluate,
//! benchmark and tune.
//!
//! Exit status is 0 on success, 1 on a data or content error and 2 on a usage
//! or configuration error.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use bsng_core::{DatasetError, Error};
use clap::{Parser, Subcommand};

use config::RunArgs;

#[derive(Debug, Parser)]
#[command(name = "bsng", version, about = "Road-accident black-spot identification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a CSV against the schema and report row and label counts.
    Validate(RunArgs),
    /// Per-variable mode or mean, in schema order.
    Profile(RunArgs),
    /// Per-variable one-hot widths against the expected total, plus the values a CSV uses.
    Audit(RunArgs),
    /// Write the encoded feature matrix of one variant as CSV.
    Encode(RunArgs),
    /// Fit the proposed pipeline on every row and save the artifact.
    Train(RunArgs),
    /// Score a CSV with a saved artifact; appends `score` and `label` columns.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        artifact: PathBuf,
    },
    /// Cross-validate families on one variant, fold by fold.
    Evaluate(RunArgs),
    /// Cross-validate the full comparison table.
    Benchmark(RunArgs),
    /// Grid search one family on one variant, maximizing mean F1.
    Tune {
        #[command(flatten)]
        run: RunArgs,
        /// TOML file mapping hyperparameter names to lists of values.
        #[arg(long)]
        grid: PathBuf,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, message: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError { code: 1, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Dataset(DatasetError::Schema(_)) => 2,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Profile(a) => commands::profile(a),
        Command::Audit(a) => commands::audit(a),
        Command::Encode(a) => commands::encode(a),
        Command::Train(a) => commands::train(a),
        Command::Predict { run, artifact } => commands::predict(run, artifact),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Tune { run, grid } => commands::tune(run, grid),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bsng: {e}");
            ExitCode::from(e.code)
        }
    }
}
