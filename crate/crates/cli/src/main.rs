//! `eqfield`: command-line access to the equilibrium-measure computations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod failure;
mod rows;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli.command, commands::Output { path: cli.output, format: cli.format }, cli.tol) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
