//! Command-line front end for `fapchan`.
//!
//! Exit codes: 0 on success, 1 on usage, parameter or I/O errors, 2 when a
//! validation or the self-test fails. The worker count comes from
//! `FAPCHAN_WORKERS` (all cores when unset) and never changes the output.

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use anyhow::{Context, Result};
use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::Outcome;

pub const WORKERS_ENV: &str = "FAPCHAN_WORKERS";

/// Parse `argv` (program name first), dispatch, and return the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    match workers_from_env() {
        Ok(w) => run_with_workers(argv, w),
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("{WORKERS_ENV}={s} is not a count"))?;
            anyhow::ensure!(n >= 1, "{WORKERS_ENV} must be at least 1");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// [`run`] with an explicit worker count instead of the environment.
pub fn run_with_workers<I, S>(argv: I, workers: Option<usize>) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match config::merge(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: building worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::ValidationFailed) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Density(a) => commands::density(a),
        Command::Cf(a) => commands::cf(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Capacity(a) => commands::capacity(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Selftest(a) => commands::selftest(a),
    }
}
