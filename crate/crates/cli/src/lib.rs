//! Command-line experiments over locally constant cocycles.

pub mod config;
pub mod report;
pub mod run;

pub use config::ExperimentConfig;
pub use report::{emit, parse_report, Check, Format, Report, Table};
pub use run::run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cocycle_core::Error),
    #[error("io: {0}")]
    Io(String),
    #[error("output: {0}")]
    Output(String),
    #[error("subcommand `{subcommand}` does not match experiment kind `{kind}` in the config")]
    KindMismatch { subcommand: String, kind: String },
}
