//! The `llpbench` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 data or validation error, 3 provenance mismatch.

pub mod artifacts;
pub mod commands;
pub mod pipeline;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use commands::*;

#[derive(Parser, Debug)]
#[command(name = "llpbench", version, about = "Build, measure and train on LLP datasets from tabular data")]
pub struct Cli {
    /// Global seed for bagging, fold splits, initialization and minibatch order.
    #[arg(long, global = true, env = "LLPBENCH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent work items; all cores by default.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Encode a raw CSV/TSV file described by a JSON schema.
    Preprocess(PreprocessArgs),
    /// Build feature-grouped, random or fixed-size feature bags.
    Bag(BagArgs),
    /// Apply bag-size and dataset-retention filters.
    Filter(FilterArgs),
    /// Compute hardness metrics for each bag file.
    Metrics(MetricsArgs),
    /// Cluster datasets by their metrics and name the clusters.
    Cluster(ClusterArgs),
    /// Train and evaluate methods over cross-validation folds.
    Train(TrainArgs),
    /// Join metrics and training runs into a results table.
    Report(ReportArgs),
    /// Run every stage from one JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PROVENANCE: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Provenance(_) => EXIT_PROVENANCE,
        _ => EXIT_DATA,
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = Ctx::new(cli.seed, cli.jobs)?;
    match &cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Bag(a) => bag(a, &ctx).map(drop),
        Command::Filter(a) => filter(a, &ctx).map(drop),
        Command::Metrics(a) => metrics(a, &ctx).map(drop),
        Command::Cluster(a) => cluster(a, &ctx).map(drop),
        Command::Train(a) => train_cmd(a, &ctx).map(drop),
        Command::Report(a) => report(a).map(drop),
        Command::Pipeline { config } => pipeline::run(&pipeline::PipelineConfig::load(config)?, &ctx),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
