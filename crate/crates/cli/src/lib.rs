//! Batch front end for `hardy-core`: configuration, check execution, grid
//! sweeps, and JSON/CSV report emission.

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;

use std::fs;
use std::io::Write;

use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] hardy_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// Executes the command, writes its reports, prints one summary line per
/// check, and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    match run_inner(cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn run_inner(cfg: &RunConfig) -> Result<i32, CliError> {
    let cfg = cfg.resolved()?;
    let out = run::execute(&cfg)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for e in &out.envelopes {
        let _ = writeln!(lock, "{}", e.summary());
    }
    for n in &out.notes {
        let _ = writeln!(lock, "{n}");
    }
    if let Some(path) = &cfg.params.output {
        let text = match cfg.format()? {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&out.envelopes).expect("envelopes serialize");
                s.push('\n');
                s
            }
            Format::Csv => match &out.csv {
                Some(t) => t.clone(),
                None => report::to_csv(&out.envelopes.iter().map(|e| e.csv_row()).collect::<Vec<_>>()),
            },
        };
        write_file(path, &text)?;
    }
    if let (Some(path), Some(plot)) = (&cfg.params.plot, &out.plot) {
        write_file(path, plot)?;
    }
    Ok(report::exit_code(out.verdicts()))
}
