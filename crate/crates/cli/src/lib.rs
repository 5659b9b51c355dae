//! Configuration, experiment drivers and artifact writers behind the `lgap` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ExperimentConfig, Mode};

/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code for failures while running an experiment.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Runtime(_) | Self::Io { .. } => EXIT_RUNTIME,
        }
    }
}

impl From<lgap::Error> for CliError {
    fn from(e: lgap::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}
