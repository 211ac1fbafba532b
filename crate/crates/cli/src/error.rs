use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("missing {what}: {} (run `telemine {producer}` first)", path.display())]
    MissingArtifact { what: &'static str, path: PathBuf, producer: &'static str },

    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::MissingArtifact { .. } => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<telemine_core::Error> for CliError {
    fn from(e: telemine_core::Error) -> Self {
        match e {
            telemine_core::Error::ConfigInvalid(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<telemine_gbdt::GbdtError> for CliError {
    fn from(e: telemine_gbdt::GbdtError) -> Self {
        match e {
            telemine_gbdt::GbdtError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<telemine_baselines::BaselineError> for CliError {
    fn from(e: telemine_baselines::BaselineError) -> Self {
        match e {
            telemine_baselines::BaselineError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("malformed JSON artifact: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("malformed CSV: {e}"))
    }
}
