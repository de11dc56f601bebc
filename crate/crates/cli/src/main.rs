mod args;
mod error;
mod experiments;
mod settings;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;
use settings::{read_config, Settings};

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fblfas: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (settings, out) = match cli.command {
        Command::Replay { csv, out } => {
            let text = std::fs::read_to_string(&csv).map_err(|e| CliError::io(&csv, e))?;
            (Settings::from_metadata(&text)?, out)
        }
        command => {
            let (kind, params) = command.into_experiment().expect("replay handled above");
            let config = match &params.config {
                Some(path) => read_config(path)?,
                None => Vec::new(),
            };
            (Settings::resolve(kind, &config, &params.overrides())?, params.out)
        }
    };
    let text = experiments::run(&settings)?.render(&settings);
    write_output(out.as_deref(), &text)
}

/// `FBLFAS_THREADS` sizes the global worker pool; results do not depend on it.
fn configure_threads() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os("FBLFAS_THREADS") else {
        return Ok(());
    };
    let threads = raw
        .to_str()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::usage(format!("FBLFAS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size the thread pool: {e}")))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(&PathBuf::from("<stdout>"), e)),
    }
}
