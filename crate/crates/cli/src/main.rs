use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use revjump_cli::config::Direction;
use revjump_cli::{exit_code, init_threads, run, Command, Overrides, EXIT_CONFIG};

/// Stationary densities, time reversal and simulation of boundary-jump diffusions on [0, 1].
#[derive(Debug, Parser)]
#[command(name = "revjump", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of simulated paths.
    #[arg(long, global = true)]
    replicates: Option<u64>,
    /// Constant added to the reversed drift.
    #[arg(long, global = true, allow_hyphen_values = true)]
    perturb_drift: Option<f64>,
    /// Switch off the backward jump clock at boundary 0 or 1 (repeatable).
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=1))]
    disable_clock: Vec<u8>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Solve for the stationary density.
    Solve,
    /// Build the time-reversed process.
    Reverse,
    /// Simulate sample paths.
    Simulate {
        #[arg(long, value_enum)]
        direction: Option<Direction>,
        /// Plot time on the vertical axis.
        #[arg(long)]
        time_vertical: bool,
    },
    /// Run the configured checks.
    Verify,
    /// Run the classification sweep.
    Sweep,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let mut overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        replicates: cli.replicates,
        perturb_drift: cli.perturb_drift,
        disable_clock: cli.disable_clock.iter().map(|&i| i as usize).collect(),
        ..Overrides::default()
    };
    let cmd = match cli.command {
        Sub::Solve => Command::Solve,
        Sub::Reverse => Command::Reverse,
        Sub::Simulate { direction, time_vertical } => {
            overrides.direction = direction;
            overrides.time_vertical = time_vertical;
            Command::Simulate
        }
        Sub::Verify => Command::Verify,
        Sub::Sweep => Command::Sweep,
    };
    let result = init_threads().and_then(|()| run(cmd, cli.config.as_deref(), &overrides));
    match result {
        Ok(status) => ExitCode::from(exit_code(status) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
