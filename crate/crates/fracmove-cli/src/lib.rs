//! Configuration, experiment orchestration and CSV export for the `fracmove`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;

pub use commands::{cmd_convergence, cmd_solve, cmd_verify};
pub use config::RunConfig;
pub use experiment::Experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    /// Carries the library error text, which names its own kind.
    #[error("{0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 1 config, 2 solver, 3 verification. Output errors count as config
    /// errors (bad `--out`).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}
