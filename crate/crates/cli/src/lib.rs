//! The `dpgd` command-line harness: instance generation, runs with CSV
//! traces, certification and method comparisons.

pub mod cli;
pub mod commands;
pub mod config;
pub mod trace_csv;

use anyhow::Result;

use cli::{Cli, Command};

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> Result<u8> {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Generate(args) => commands::generate(args, out_dir),
        Command::Run(args) => commands::run(args, out_dir),
        Command::Certify(args) => commands::certify(args, out_dir),
        Command::Compare(args) => commands::compare(args, out_dir),
    }
}
