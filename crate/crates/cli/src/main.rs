use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hardy_cli::config::{Command, Params, RunConfig};

/// Numerical verification of Hardy-operator bounds on atomic Hardy spaces.
#[derive(Parser, Debug)]
#[command(name = "hardy-verify", version, about)]
struct Cli {
    command: Command,
    /// JSON file of parameters; flags given on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let params = match &cli.config {
        Some(path) => {
            let loaded = std::fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))
                .and_then(|t| Params::from_json(&t).map_err(|e| e.to_string()));
            match loaded {
                Ok(file) => file.overlay(&cli.params),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
        }
        None => cli.params,
    };
    let code = hardy_cli::run(&RunConfig { command: cli.command, params });
    ExitCode::from(code as u8)
}
