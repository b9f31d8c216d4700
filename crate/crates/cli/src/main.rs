//! `cvpt`: runs scenario files through the waveguide simulator and writes CSV.
//!
//! Exit codes: 0 success, 1 oracle check failed, 2 configuration or I/O
//! error, 3 numeric overflow.

mod commands;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Sweep;
use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cvpt_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("oracle check failed")]
    OracleFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::OracleFailed => 1,
            CliError::Core(cvpt_core::Error::Overflow(_)) => 3,
            CliError::Config(_) | CliError::Core(_) | CliError::Io { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cvpt",
    version,
    about = "Gain/loss waveguide pair with squeezing: Gaussian dynamics and entanglement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file. `evolve` otherwise uses the scenario's `output`, and
    /// everything else goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the Monte Carlo seed of the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time series of intensities, correlation, E_N and physicality margin.
    Evolve { scenario: PathBuf },
    /// Entanglement and spectral summary over a parameter sweep.
    Scan {
        scenario: PathBuf,
        /// `<J|r|theta>:<lo>:<hi>:<n>`
        #[arg(long)]
        sweep: String,
    },
    /// Checks the closed form against RK4 and Monte Carlo.
    OracleCheck { scenario: PathBuf },
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Evolve { scenario } => {
            let s = Scenario::load(scenario)?;
            let csv = commands::evolve(&s)?;
            emit(&csv, cli.out.as_deref().or(s.output.as_deref()))
        }
        Command::Scan { scenario, sweep } => {
            let s = Scenario::load(scenario)?;
            let sweep = Sweep::parse(sweep)?;
            let csv = commands::scan(&s, &sweep)?;
            // The scenario's `output` names the evolve series; scans go to
            // `--out` or stdout only.
            emit(&csv, cli.out.as_deref())
        }
        Command::OracleCheck { scenario } => {
            let s = Scenario::load(scenario)?;
            let report = commands::oracle_check(&s, cli.seed)?;
            emit(&report.text, cli.out.as_deref())?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::OracleFailed)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvpt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
