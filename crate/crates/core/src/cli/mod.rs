//! Command-line front end.

mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::inequality::Suite;

pub use commands::{calibrate, read_calibration, Calibration};
pub use config::{parse_radii, parse_stages, AuditToggles, LogLevel, LogOptions, OutputOptions, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "nematic2d", version, about = "Compressible nematic flow simulator with energy-law audits")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Scenario selection shared by `run` and `expand`.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Snapshot cadence in steps; 0 disables.
    #[arg(long)]
    pub snap_every: Option<usize>,
    /// Seed for the initial-data sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    /// File written by `calibrate`; its constant replaces `monitor.c1`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, or its continuation stages when it has any.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Continuation stages `eps:delta:n_modes,...`.
        #[arg(long)]
        stages: Option<String>,
        /// Print the resolved configuration as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Audit an existing ledger.
    Audit {
        ledger: PathBuf,
        /// Write `audit.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail when the largest positive residual exceeds this.
        #[arg(long)]
        max_positive: Option<f64>,
    },
    /// Numerical inequality checks.
    Ineq {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Cells per side for the Ladyzhenskaya ensemble.
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value = "out/ineq")]
        out: PathBuf,
    },
    /// Expanding-ball sequence.
    Expand {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Increasing radii `r1,r2,...`; the torus is resized to `4 r_max`
        /// at the configured spacing.
        #[arg(long)]
        radii: Option<String>,
    },
    /// Estimate the interpolation constant and write it as JSON.
    Calibrate {
        #[arg(long, default_value = "c1.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run { .. } => "run",
            Command::Audit { .. } => "audit",
            Command::Ineq { .. } => "ineq",
            Command::Expand { .. } => "expand",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

/// Machine-readable record emitted on failure.
#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub status: &'static str,
    pub command: String,
    pub kind: String,
    pub message: String,
    pub step: Option<usize>,
}

pub const FAILURE_FILE: &str = "failure.json";

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(&cli);
    let name = cli.command.name();
    let (result, out_dir) = commands::dispatch(&cli.command, cli.verbose > 0 || cli.quiet);
    match result {
        Ok(commands::Outcome::Passed) => 0,
        Ok(commands::Outcome::Violated(msg)) => {
            fail(FailureRecord { status: "failed", command: name.into(), kind: "invariant".into(), message: msg, step: None }, out_dir)
        }
        Err(e) => fail(
            FailureRecord { status: "failed", command: name.into(), kind: e.kind().into(), message: e.to_string(), step: e.step() },
            out_dir,
        ),
    }
}

fn fail(rec: FailureRecord, out_dir: Option<PathBuf>) -> i32 {
    let json = serde_json::to_string(&rec).unwrap_or_else(|_| format!("{{\"status\":\"failed\",\"message\":{:?}}}", rec.message));
    eprintln!("{json}");
    if let Some(dir) = out_dir {
        if std::fs::create_dir_all(&dir).is_ok() {
            let _ = std::fs::write(dir.join(FAILURE_FILE), &json);
        }
    }
    1
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(log::LevelFilter::Trace)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
    log::set_max_level(level);
}
