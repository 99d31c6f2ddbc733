//! Command implementations behind the `geoguide` binary. Each command
//! takes parsed arguments, writes its outputs and returns what it wrote so
//! tests can inspect results without spawning a process.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod stats;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Environment variable capping the worker count; 0 or unset means auto.
pub const THREADS_ENV: &str = "GEOGUIDE_THREADS";

pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Flow(a) => commands::flow::cmd_flow(a).map(|_| ()),
        Command::Invert(a) => commands::invert::cmd_invert(a).map(|_| ()),
        Command::Score(a) => commands::score::cmd_score(a).map(|_| ()),
        Command::Bench(a) => commands::bench::cmd_bench(a).map(|_| ()),
        Command::Dimstudy(a) => commands::dimstudy::cmd_dimstudy(a).map(|_| ()),
    }
}
