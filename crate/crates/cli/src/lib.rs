//! Pipeline orchestration behind the `telemine` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod layout;
pub mod model;

use std::fmt::Write;
use std::str::FromStr;

pub use config::{Config, Method, Overrides};
pub use error::{CliError, Result};
pub use layout::RunLayout;

use commands::detect::{aggregate_rows, summary_table};
use commands::importance::ranked;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Prepare,
    Featurize,
    Train,
    Evaluate,
    Ablate,
    Importance,
    Synth,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Prepare,
        Command::Featurize,
        Command::Train,
        Command::Evaluate,
        Command::Ablate,
        Command::Importance,
        Command::Synth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Prepare => "prepare",
            Command::Featurize => "featurize",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Ablate => "ablate",
            Command::Importance => "importance",
            Command::Synth => "synth",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command `{s}`")))
    }
}

/// Validates the config, freezes it into the run directory and runs one
/// command. Returns a short human-readable summary.
pub fn run(command: Command, cfg: &Config) -> Result<String> {
    cfg.validate()?;
    let layout = RunLayout::new(&cfg.run.out);
    io::write_text(&layout.frozen_config(command.name()), &cfg.to_toml()?)?;
    let mut s = String::new();
    match command {
        Command::Synth => {
            let logs = commands::synth(cfg)?;
            let anomalous: usize = logs.iter().map(|l| l.raw.rows.iter().filter(|r| r.label == 1).count()).sum();
            let total: usize = logs.iter().map(|l| l.raw.rows.len()).sum();
            writeln!(
                s,
                "wrote {} logs to {} ({anomalous} of {total} samples anomalous)",
                logs.len(),
                cfg.dataset_dir().display()
            )
            .ok();
        }
        Command::Prepare => {
            let m = commands::prepare(cfg)?;
            let usable = m.usable().count();
            writeln!(s, "{usable} of {} logs usable, {} channels retained", m.logs.len(), m.channels.len()).ok();
            for e in m.logs.iter().filter(|e| !e.usable) {
                writeln!(s, "dropped {}: {}", e.log_id, e.drop_reason.as_deref().unwrap_or("")).ok();
            }
        }
        Command::Featurize => {
            for sf in commands::featurize(cfg)? {
                let count = |p| sf.assignment.count(p);
                use telemine_core::eval::Partition::*;
                writeln!(
                    s,
                    "{}/{}: {} windows x {} features; train {} valid {} test {} purged {}",
                    sf.protocol,
                    sf.key,
                    sf.features.n_rows(),
                    sf.features.width(),
                    count(Train),
                    count(Valid),
                    count(Test),
                    count(Purged)
                )
                .ok();
            }
        }
        Command::Train => {
            let models = commands::train(cfg)?;
            writeln!(s, "trained {} models under {}", models.len(), layout.root.join("models").display()).ok();
        }
        Command::Evaluate => {
            let reports = commands::evaluate(cfg)?;
            s.push_str(&summary_table(&aggregate_rows(reports.iter().map(|r| (r.method.clone(), r)))?));
        }
        Command::Ablate => {
            let runs = commands::ablate(cfg)?;
            s.push_str(&summary_table(&aggregate_rows(runs.iter().map(|r| (r.variant.clone(), &r.report)))?));
        }
        Command::Importance => {
            let rep = commands::importance(cfg)?;
            for family in ranked(&rep.mean) {
                writeln!(s, "{family:<24} {:.4}", rep.mean[family]).ok();
            }
        }
    }
    Ok(s)
}
