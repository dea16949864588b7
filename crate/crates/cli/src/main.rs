//! dataq: evaluate tabular data quality with no domain knowledge.
//!
//! Pipeline commands (generate | corrupt | train | predict | evaluate) plus
//! `run` for the whole experiment in one pass and `sweep` for parameter
//! grids. Exit codes: 0 ok, 1 usage/config error, 2 data error, 3 training
//! error.

mod commands;
mod config;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};



#[derive(Parser)]
#[command(
    name = "dataq",
    version,
    about = "Tabular data quality: inject labelled outliers, train a boosted classifier, score predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic pristine dataset (produce-price schema)
    Generate(GenerateArgs),
    /// Corrupt a pristine CSV: labelled min/max outlier injection
    Corrupt(CorruptArgs),
    /// Train the boosted classifier on the head split of a labelled CSV
    Train(TrainArgs),
    /// Predict quality labels for the tail split of a labelled CSV
    Predict(PredictArgs),
    /// Score a predictions CSV into a report
    Evaluate(EvaluateArgs),
    /// Full pipeline: generate/load, corrupt, train, predict, evaluate
    Run(RunArgs),
    /// Grid sweep over corruption and training parameters
    Sweep(SweepArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
struct CommonArgs {
    /// Master seed; generation, corruption, and training all derive from it
    #[arg(long)]
    seed: Option<u64>,
    /// Directory all output files are written into
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of rows to generate
    #[arg(long)]
    rows: Option<usize>,
}

#[derive(Args, Debug)]
struct CorruptionFlags {
    /// Cell pushes per direction (default: half the row count)
    #[arg(long, conflicts_with = "corruption_fraction")]
    corruption_loops: Option<usize>,
    /// Cell pushes per direction as a fraction of the row count
    #[arg(long)]
    corruption_fraction: Option<f64>,
    /// Push magnitude policy: paper | scaled:LO:HI
    #[arg(long)]
    magnitude: Option<String>,
}

#[derive(Args, Debug)]
struct TrainFlags {
    /// Boosting iterations
    #[arg(long)]
    iterations: Option<usize>,
    /// Maximum tree depth
    #[arg(long)]
    depth: Option<usize>,
    /// Shrinkage applied to each tree
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args, Debug)]
struct SplitFlags {
    /// Head rows used for training
    #[arg(long, conflicts_with = "split_fraction")]
    split_count: Option<usize>,
    /// Head fraction used for training
    #[arg(long)]
    split_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct CorruptArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Pristine input CSV
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    corruption: CorruptionFlags,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corrupted (labelled) input CSV
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    training: TrainFlags,
    #[command(flatten)]
    split: SplitFlags,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corrupted (labelled) input CSV
    #[arg(long)]
    input: PathBuf,
    /// Model file (default: <out-dir>/model.json)
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    split: SplitFlags,
    /// P(bad) at or above which a row is labelled bad
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Predictions CSV (label + prediction columns)
    #[arg(long)]
    input: PathBuf,
    /// Split metadata recorded in the report
    #[command(flatten)]
    split: SplitFlags,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Pristine input CSV; omitted: generate --rows synthetic rows instead
    #[arg(long)]
    input: Option<PathBuf>,
    /// Rows to generate when no input file is given
    #[arg(long)]
    rows: Option<usize>,
    #[command(flatten)]
    corruption: CorruptionFlags,
    #[command(flatten)]
    training: TrainFlags,
    #[command(flatten)]
    split: SplitFlags,
    /// P(bad) at or above which a row is labelled bad
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Rows generated per sweep cell
    #[arg(long)]
    rows: Option<usize>,
    /// Corruption fractions to sweep
    #[arg(long, value_delimiter = ',')]
    loop_fractions: Option<Vec<f64>>,
    /// Magnitude policies to sweep (paper | scaled:LO:HI)
    #[arg(long, value_delimiter = ',')]
    magnitudes: Option<Vec<String>>,
    /// Iteration counts to sweep
    #[arg(long, value_delimiter = ',')]
    iterations: Option<Vec<usize>>,
    /// Tree depths to sweep
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Seeded repetitions per cell
    #[arg(long)]
    repetitions: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Corrupt(args) => commands::corrupt(&args),
        Command::Train(args) => commands::train(&args),
        Command::Predict(args) => commands::predict(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Run(args) => commands::run(&args),
        Command::Sweep(args) => sweep::sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
