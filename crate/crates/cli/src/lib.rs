//! Configuration, commands and file formats of the `revjump` command-line tool.

pub mod commands;
pub mod config;
pub mod io;
pub mod plot;

use std::path::PathBuf;

use revjump::verify::Status;
use thiserror::Error;

pub use commands::{run, Command, Overrides};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Solver {
        stage: &'static str,
        #[source]
        source: revjump::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_FAILED: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver { .. } | CliError::Io { .. } => EXIT_SOLVER,
        }
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass => EXIT_OK,
        Status::Fail => EXIT_FAILED,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Caps the global worker pool at `REVJUMP_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("REVJUMP_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("REVJUMP_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("REVJUMP_THREADS: {e}")))
}
