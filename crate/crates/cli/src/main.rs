use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use telemine_cli::{run, CliError, Command, Config, Overrides};
use telemine_core::eval::Protocol;

/// Telemetry anomaly mining: window descriptors, boosted trees and
/// leakage-aware evaluation.
#[derive(Debug, Parser)]
#[command(name = "telemine", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run only this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run only this protocol (chronological, purged_chronological, leave_log_out).
    #[arg(long, global = true)]
    protocol: Option<String>,

    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Ingest raw CSV logs: align, filter channels by coverage, impute.
    Prepare,
    /// Window the prepared logs and compute descriptors per split.
    Featurize,
    /// Fit the configured detectors per protocol and seed.
    Train,
    /// Score test partitions and write reports.
    Evaluate,
    /// Descriptor-group ablation of the boosted-tree detector.
    Ablate,
    /// Gain share per telemetry family.
    Importance,
    /// Generate the synthetic dataset.
    Synth,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Prepare => Command::Prepare,
            Cmd::Featurize => Command::Featurize,
            Cmd::Train => Command::Train,
            Cmd::Evaluate => Command::Evaluate,
            Cmd::Ablate => Command::Ablate,
            Cmd::Importance => Command::Importance,
            Cmd::Synth => Command::Synth,
        }
    }
}

fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("TELEMINE_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("TELEMINE_WORKERS: expected a non-negative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn main_inner(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let protocol = cli.protocol.as_deref().map(str::parse::<Protocol>).transpose()?;
    cfg.apply(&Overrides { out: cli.out.clone(), seed: cli.seed, protocol, workers: workers_from_env()? });
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    run(cli.command.into(), &cfg)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
