//! Command-line front end: `run`, `certify-na`, `check-family`, `sweep`.
//!
//! Exit codes: 0 on success, 1 on bad input or configuration, 2 when a
//! computation finished but failed its check (stalled residual, power
//! iteration or inner solve out of budget, defect above tolerance).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Solver(viscofix::Error),
}

impl CliError {
    pub fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(
                viscofix::Error::MaxIterExceeded { .. }
                | viscofix::Error::NoConvergence { .. }
                | viscofix::Error::NoCommonFixedPoint { .. },
            ) => 2,
            _ => 1,
        }
    }
}

impl From<viscofix::Error> for CliError {
    fn from(e: viscofix::Error) -> Self {
        match e {
            viscofix::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Solver(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "viscofix",
    version,
    about = "Implicit viscosity solver for nonexpansive maps"
)]
pub struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Input JSON file.
    #[arg(long = "config", value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(value_name = "PATH", conflicts_with = "config")]
    pub path: Option<PathBuf>,
    /// Overrides the seed in the input.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Input {
    fn path(&self) -> Result<&Path, CliError> {
        self.config
            .as_deref()
            .or(self.path.as_deref())
            .ok_or_else(|| CliError::config("no input file given"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a configured problem and write trace.csv, trace.json and summary.json.
    Run {
        #[command(flatten)]
        input: Input,
        /// Overrides options.outer_tol.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Certify that a square matrix attains its operator norm.
    CertifyNa {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Check the composition law of an operator family.
    CheckFamily {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 3)]
        vectors: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Run one solve per value of a config parameter.
    Sweep {
        #[command(flatten)]
        input: Input,
        /// Dotted path into the config, e.g. schedule.p.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// Overrides options.outer_tol.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let seed_or_default = |s: Option<u64>| s.unwrap_or(viscofix::sampling::DEFAULT_SEED);
    match &cli.command {
        Command::Run { input, tol } => {
            commands::cmd_run(input.path()?, input.seed, *tol, cli.quiet)
        }
        Command::CertifyNa { input, tol } => {
            commands::cmd_certify_na(input.path()?, *tol, seed_or_default(input.seed))
        }
        Command::CheckFamily {
            input,
            pairs,
            vectors,
            tol,
        } => commands::cmd_check_family(
            input.path()?,
            *pairs,
            *vectors,
            *tol,
            seed_or_default(input.seed),
        ),
        Command::Sweep {
            input,
            param,
            values,
            tol,
        } => commands::cmd_sweep(input.path()?, param, values, input.seed, *tol, cli.quiet),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match catch_unwind(AssertUnwindSafe(|| dispatch(&cli))) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            1
        }
    }
}
