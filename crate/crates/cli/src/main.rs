mod args;
mod commands;

use args::{Cli, Command};
use clap::Parser;
use std::process::ExitCode;

/// Bad flags or malformed input; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FREEBDY_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Minmax(a) => commands::minmax(a),
        Command::Tighten(a) => commands::tighten(a),
        Command::Validate(a) => commands::validate(a),
        Command::Export(a) => commands::export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
