//! `kpart`: fit cubic regression splines with min/max K-partition knots.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 usage error.

mod commands;
mod document;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kpart_core::{ColumnMap, KpartError};

#[derive(Debug, Parser)]
#[command(
    name = "kpart",
    version,
    about = "Cubic spline regression with min/max K-partition knot selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert crime counts to per-capita rates (CSV on stdout).
    Rate(RateArgs),
    /// Select knots, pick the minimum-BIC model and write it as JSON.
    Fit(FitArgs),
    /// Evaluate a fitted model on a grid (TSV) for plotting.
    Curve(CurveArgs),
    /// Fit every CSV in a directory and tabulate the results.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ColumnArgs {
    /// Header of the year column.
    #[arg(long, default_value = "year")]
    year_col: String,
    /// Header of the population column.
    #[arg(long, default_value = "population")]
    pop_col: String,
    /// Header of the crime count column.
    #[arg(long, default_value = "count")]
    count_col: String,
    /// Header of the rate column, used when there is no count column.
    #[arg(long, default_value = "rate")]
    rate_col: String,
}

impl ColumnArgs {
    fn column_map(&self) -> ColumnMap {
        ColumnMap {
            year: self.year_col.clone(),
            population: self.pop_col.clone(),
            count: self.count_col.clone(),
            rate: self.rate_col.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Input CSV.
    #[arg(short, long)]
    input: PathBuf,
    /// Write here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV.
    #[arg(short, long)]
    input: PathBuf,
    /// Number of partitions K.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Model JSON destination. Without it the JSON goes to stdout and the
    /// summary to stderr.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Model JSON written by `kpart fit`.
    #[arg(short, long)]
    input: PathBuf,
    /// Number of evenly spaced grid points over the fitted population range.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
    points: u32,
    /// Evaluate at the population values of this CSV instead of a grid.
    #[arg(long)]
    at: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of CSV files, one series per file.
    #[arg(short, long)]
    input: PathBuf,
    /// Number of partitions K used for every series.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Write here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Usage(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::Usage(m) => m,
        }
    }
}

impl From<KpartError> for CliError {
    fn from(e: KpartError) -> Self {
        match e {
            KpartError::Contract(_) => CliError::Usage(e.to_string()),
            KpartError::SingularDesign { .. }
            | KpartError::InsufficientData { .. }
            | KpartError::NoFeasibleModel { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// `KPART_MAX_K`, default 20.
fn max_k_from_env() -> Result<usize, CliError> {
    match std::env::var("KPART_MAX_K") {
        Err(_) => Ok(kpart_core::DEFAULT_MAX_K),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| {
                CliError::Usage(format!("KPART_MAX_K must be a positive integer, got `{v}`"))
            }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Rate(args) => commands::rate(&args),
        Command::Fit(args) => commands::fit(&args),
        Command::Curve(args) => commands::curve(&args),
        Command::Report(args) => commands::report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kpart: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
