//! Command-line front end: configuration parsing, subcommand dispatch and
//! artifact output for the `leray` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::EXIT_OPERATIONAL;
use config::{Config, RawConfig};
use output::Artifacts;

#[derive(Debug, Parser)]
#[command(name = "leray", version, about = "Steady plane Navier-Stokes: invading domains, estimate checks and Oseen cross-checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated check names for `verify` (or `all`).
    #[arg(long, global = true)]
    pub checks: Option<String>,
    /// Seed for random test fields; overrides the `seed` key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps; overrides the `workers` key.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve on one disk and dump the solution.
    Solve,
    /// Run the invading-domains schedule.
    Invade,
    /// Run the schedule over the `sweep.lambda` x `sweep.amplitude` grid.
    Sweep,
    /// Load a dumped solution or run and evaluate estimate checks.
    Verify,
    /// Run the Oseen fixed-point iteration.
    Oseen,
    /// Compare the invading-domains and fixed-point solutions.
    Crosscheck,
    /// Collate the JSON reports in the output directory into `summary.csv`.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Invade => "invade",
            Self::Sweep => "sweep",
            Self::Verify => "verify",
            Self::Oseen => "oseen",
            Self::Crosscheck => "crosscheck",
            Self::Report => "report",
        }
    }
}

/// Build the configuration from the file and the flag overrides.
pub fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
            RawConfig::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?
        }
        None => RawConfig::default(),
    };
    if let Some(seed) = cli.seed {
        raw.set("seed", &seed.to_string())?;
    }
    if let Some(workers) = cli.workers {
        raw.set("workers", &workers.to_string())?;
    }
    if let Some(checks) = &cli.checks {
        raw.set("verify.checks", checks)?;
    }
    Ok(Config::from_raw(raw)?)
}

/// Run one command and return the exit status.
pub fn run(cli: &Cli) -> i32 {
    match try_run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_OPERATIONAL
        }
    }
}

fn try_run(cli: &Cli) -> anyhow::Result<i32> {
    let cfg = load_config(cli)?;
    let art = Artifacts::new(&cli.out, cli.command.name(), cfg.digest(), cfg.seed)?;
    match cli.command {
        Command::Solve => commands::cmd_solve(&cfg, &art),
        Command::Invade => commands::cmd_invade(&cfg, &art),
        Command::Sweep => commands::cmd_sweep(&cfg, &art),
        Command::Verify => commands::cmd_verify(&cfg, &art),
        Command::Oseen => commands::cmd_oseen(&cfg, &art),
        Command::Crosscheck => commands::cmd_crosscheck(&cfg, &art),
        Command::Report => commands::cmd_report(&art),
    }
}
