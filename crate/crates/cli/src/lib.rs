//! Command-line front end for the `kfbd` library: divergence estimates,
//! verification suites, the radial generator table, location fits and
//! bound audits.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

pub use args::Cli;
pub use error::CliError;

pub const EXIT_OK: u8 = 0;
/// A verification suite or audit ran and reported a failure.
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("kfbd: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command line; `Ok(false)` means the command completed but
/// something it checks did not hold.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    let ctx = config::Context::new(&cli.global)?;
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        // an already initialised pool (e.g. in tests) keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let report = commands::dispatch(&cli.command, &ctx)?;
    output::emit(&report, &ctx)?;
    Ok(report.pass)
}
