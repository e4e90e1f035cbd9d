//! `kornshell` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a solve or an asserted estimate fails,
//! 2 for configuration errors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use commands::Failure;
use config::{merged_args, Cli, Command, RunConfig};

fn run() -> Result<(), Failure> {
    let argv = merged_args(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(Failure::Config(String::new()));
        }
    };
    let cfg = RunConfig::resolve(&cli.command)?;
    match cli.command {
        Command::SweepConstant(_) => commands::sweep_constant_cmd(&cfg),
        Command::SweepAnsatz(_) => commands::sweep_ansatz_cmd(&cfg),
        Command::RectLemmas(_) => commands::rect_estimates_cmd(&cfg),
        Command::CheckRigid(_) => commands::check_rigid_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Run(msg)) = &f;
            if !msg.is_empty() {
                eprintln!("error: {msg}");
                if matches!(f, Failure::Config(_)) {
                    eprintln!("run `kornshell --help` for usage");
                }
            }
            ExitCode::from(f.code() as u8)
        }
    }
}
