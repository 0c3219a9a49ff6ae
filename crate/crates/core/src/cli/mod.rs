//! Command-line front end. Exit codes: 0 success, 2 parse or usage error,
//! 3 numerical or simulation failure, 4 operating point at a boundary.

mod commands;
mod problem;
mod report;

pub use problem::{ChannelBlock, DballBlock, ProblemFile, SimBlock, UepBlock};
pub use report::{
    ChannelReport, JsccReport, LosslessReport, RateRow, SeparationReport, SimCsvRow, SimEntry,
    SimulateReport, SourceRateRow, SourceReport,
};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::jscc::Units;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_BOUNDARY: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BoundaryDistortion { .. } | Error::RateOutOfRange { .. } => EXIT_BOUNDARY,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Bits,
    Nats,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Bits => Units::Bits,
            UnitsArg::Nats => Units::Nats,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "jscc", version, about = "Finite-blocklength JSCC dispersion toolkit")]
pub struct Cli {
    /// Report units (default: the problem file's, else bits)
    #[arg(long, global = true, value_enum)]
    pub units: Option<UnitsArg>,
    /// Output format (default: csv for separation, json otherwise)
    #[arg(long, global = true, value_enum)]
    pub out: Option<Format>,
    /// Capacity solver tolerance in nats
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed overriding the problem file's
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Block lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity, dispersion and normal-approximation rates of the channel
    Channel {
        file: PathBuf,
        #[command(flatten)]
        list: ListArgs,
        /// Error probability (default: the file's, else 0.1)
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Rate-distortion function, source dispersion and rates
    Source {
        file: PathBuf,
        #[command(flatten)]
        list: ListArgs,
        /// Distortion level (default: the file's `d`)
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// OPTA, JSCC dispersion and distortion thresholds
    Jscc {
        file: PathBuf,
        #[command(flatten)]
        list: ListArgs,
        /// Report the lossless bandwidth-expansion sequence instead
        #[arg(long)]
        lossless: bool,
    },
    /// Equivalent error probability of separate coding
    Separation {
        /// Error probabilities, comma separated
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        eps_grid: Option<Vec<f64>>,
        /// Dispersion ratios rho V_C / V_S, comma separated
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        lambda_list: Option<Vec<f64>>,
        /// Eight standard ratios on 200 log-spaced points in [1e-4, 0.5]
        #[arg(long = "paper-fig3")]
        preset: bool,
        #[arg(long, default_value_t = crate::separation::DEFAULT_GRID_TOL)]
        grid_tol: f64,
    },
    /// Monte-Carlo and enumeration checks
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads; results do not depend on it
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        list: ListArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Excess,
    CltMi,
    CltJscc,
    Xi,
    Uep,
    Dball,
    MiCont,
}

impl What {
    pub fn name(self) -> &'static str {
        match self {
            What::Excess => "excess",
            What::CltMi => "clt-mi",
            What::CltJscc => "clt-jscc",
            What::Xi => "xi",
            What::Uep => "uep",
            What::Dball => "dball",
            What::MiCont => "mi-cont",
        }
    }
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: EXIT_NUMERIC,
        message: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    let fail = |e: String| CliError {
        code: EXIT_NUMERIC,
        message: e,
    };
    for row in rows {
        w.serialize(row).map_err(|e| fail(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| fail(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| fail(e.to_string()))
}

/// Parses `args` (including the program name) and returns the report text.
pub fn execute<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError {
        code: if e.use_stderr() { EXIT_PARSE } else { EXIT_OK },
        message: e.render().to_string(),
    })?;
    if !(cli.tol > 0.0) {
        return Err(CliError::parse("--tol must be positive"));
    }
    let text = commands::dispatch(&cli)?;
    match &cli.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError {
                code: EXIT_PARSE,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match execute(args) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) if e.code == EXIT_OK => {
            print!("{}", e.message);
            EXIT_OK
        }
        Err(e) => {
            let msg = e.message.trim_end();
            if msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            e.code
        }
    }
}
