//! `cylcurl`: batch front end for the cylindrically symmetric curl-curl solvers.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Eigs,
    Ground,
    Sweep,
    Bounds,
    EpsNu,
    Multiplicity,
    Bubble,
    AnisoCheck,
    Continuity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigs => "eigs",
            Command::Ground => "ground",
            Command::Sweep => "sweep",
            Command::Bounds => "bounds",
            Command::EpsNu => "eps_nu",
            Command::Multiplicity => "multiplicity",
            Command::Bubble => "bubble",
            Command::AnisoCheck => "aniso_check",
            Command::Continuity => "continuity",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cylcurl", version, about = "Ground states, bound states and level diagnostics for the cylindrically symmetric curl-curl problem")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration; all defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Caps the worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Also writes the node mask as `grid.csv`.
    #[arg(long)]
    emit_grid: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl From<cylcurl::Error> for CliError {
    fn from(e: cylcurl::Error) -> Self {
        use cylcurl::Error as E;
        match e {
            E::Config(_) | E::OutsideWindow { .. } | E::InsufficientSpectrum(_) => CliError::Config(e.to_string()),
            E::Numeric(_) | E::DegenerateDirection(_) | E::NotConverged { .. } => CliError::Solver(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command, &cfg, cli.emit_grid) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Solver(msg) = &e {
                if let Err(w) = output::write_failure(&cfg, cli.command, msg) {
                    eprintln!("error: {w}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
