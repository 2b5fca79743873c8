//! `conekit` command-line tool.
//!
//! Exit codes: 0 on success, 1 when an operation fails or a report contains
//! failures (the report is still written), 2 on usage or configuration errors.

mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;

fn configure_threads() -> Result<(), io::CliError> {
    let Ok(v) = std::env::var("CONEKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| io::CliError::Usage(format!("CONEKIT_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| io::CliError::Failure(e.to_string()))
}

fn main() -> ExitCode {
    let argv = match io::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| commands::run(&cli.command));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
