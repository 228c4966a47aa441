//! Command-line front end: file formats, settings resolution and the
//! `fhmm` subcommands.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use std::ffi::OsString;
use std::io::Write as _;

use clap::Parser;

use crate::args::Cli;
use crate::commands::Session;
use crate::config::{pick, FileConfig};
use crate::error::{CliError, Result};

fn execute(cli: &Cli) -> Result<()> {
    let file = FileConfig::discover(cli.config.as_deref())?;
    let threads = pick(cli.threads, file.threads, 0);
    let naive = cli.naive || file.naive.unwrap_or(false);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let mut session = Session {
        file,
        naive,
        timings: Vec::new(),
    };
    let outcome = pool.install(|| commands::run(&cli.command, &mut session));
    if !session.timings.is_empty() {
        let mut text = session.timings.join("\n");
        text.push('\n');
        match &cli.timing_log {
            Some(p) => commands::write_atomic(p, &text)?,
            None => {
                let _ = std::io::stderr().write_all(text.as_bytes());
            }
        }
    }
    outcome
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fhmm: {e}");
            e.exit_code()
        }
    }
}
