use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vulnmatch::compiler::CompileError;
use vulnmatch::ledger::LedgerError;
use vulnmatch::session::SessionError;
use vulnmatch::vulnid::VulnIdError;

mod bench;
mod compile;
mod idgen;
mod ledger;
mod simulate;

#[derive(Parser)]
#[command(name = "vulnmatch", version, about = "Threshold private set intersection over hashed vulnerability identifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hash identifier objects (one JSON object per line) to σ-bit values.
    Idgen(idgen::Args),
    /// Build a matching circuit and its stage manifest.
    Compile(compile::Args),
    /// Run a session between in-process parties.
    Simulate(simulate::Args),
    /// Compute the expected reports of a session in the clear.
    Oracle(simulate::OracleArgs),
    /// Hash-chain ledger simulator and its dictionary attack.
    #[command(subcommand)]
    Ledger(ledger::Command),
    /// Gate counts, rounds, traffic and wall time over a parameter grid.
    Bench(bench::Args),
}

/// A run that finished but failed its own checks: error code and message.
#[derive(Debug)]
pub struct Failed(pub &'static str, pub String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Failed {}

fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failed>() {
            return (f.0, 1);
        }
        if let Some(s) = cause.downcast_ref::<SessionError>() {
            return match s {
                SessionError::AbortUnsorted(_) => ("abort-unsorted", 3),
                SessionError::Parse { .. } => ("parse", 1),
                SessionError::ConfigInvalid(_) | SessionError::ConfigMismatch(_) => ("config", 1),
                _ => ("session", 1),
            };
        }
        if cause.downcast_ref::<VulnIdError>().is_some() {
            return ("identifier", 1);
        }
        if cause.downcast_ref::<CompileError>().is_some() {
            return ("config", 1);
        }
        if let Some(l) = cause.downcast_ref::<LedgerError>() {
            return match l {
                LedgerError::Corrupt(_) => ("tampered", 4),
                _ => ("ledger", 1),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 1);
        }
    }
    ("error", 1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Idgen(a) => idgen::run(a),
        Command::Compile(a) => compile::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Oracle(a) => simulate::oracle(a),
        Command::Ledger(c) => ledger::run(c),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = classify(&e);
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{code}]: {msg}");
            ExitCode::from(status)
        }
    }
}
