//! Command-line front end and experiment harness for `l0cca`.
//!
//! Every subcommand resolves its flags (or a previous `manifest.json`) into a
//! serialisable config, validates it, and only then creates the output
//! directory. Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::bench::{BenchRuntimeArgs, BenchTable1Args};
use commands::eval::EvalArgs;
use commands::gen::GenArgs;
use commands::path::PathArgs;
use commands::train::{TrainDeepArgs, TrainLinearArgs, TrainMultiviewArgs};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "l0cca", version, about = "Sparse CCA with stochastic gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic two-view dataset with known canonical vectors.
    Gen(GenArgs),
    /// Train linear ℓ0-CCA.
    TrainLinear(TrainLinearArgs),
    /// Train ℓ0-DCCA with one network per view.
    TrainDeep(TrainDeepArgs),
    /// Train ℓ0-DGCCA on two or more views.
    TrainMultiview(TrainMultiviewArgs),
    /// Sweep λ for linear ℓ0-CCA.
    Path(PathArgs),
    /// Repeated synthetic trials with estimation errors per model.
    #[command(name = "bench-table1")]
    BenchTable1(BenchTable1Args),
    /// Training time over a grid of sample sizes and dimensions.
    BenchRuntime(BenchRuntimeArgs),
    /// k-means accuracy and mutual information of an embedding.
    Eval(EvalArgs),
}

fn print_json<T: Serialize>(v: &T) {
    if let Ok(s) = serde_json::to_string(v) {
        println!("{s}");
    }
}

pub fn dispatch(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Gen(a) => {
            let cfg = commands::gen::resolve_args(a)?;
            commands::gen::execute(&cfg)?;
            print_json(&serde_json::json!({ "out": cfg.out }));
        }
        Command::TrainLinear(a) => print_json(&commands::train::execute_linear(&commands::train::resolve_linear(a)?)?),
        Command::TrainDeep(a) => print_json(&commands::train::execute_deep(&commands::train::resolve_deep(a)?)?),
        Command::TrainMultiview(a) => {
            print_json(&commands::train::execute_multiview(&commands::train::resolve_multiview(a)?)?)
        }
        Command::Path(a) => {
            let out = commands::path::execute(&commands::path::resolve_args(a)?)?;
            if let Some(s) = out.selected {
                print_json(&serde_json::json!({ "lambda": s.lambda, "holdout_rho_hat": s.holdout_rho_hat }));
            }
        }
        Command::BenchTable1(a) => {
            for s in commands::bench::execute_table1(&commands::bench::resolve_table1(a)?)? {
                print_json(&s);
            }
        }
        Command::BenchRuntime(a) => {
            for c in commands::bench::execute_runtime(&commands::bench::resolve_runtime(a)?)? {
                print_json(&c);
            }
        }
        Command::Eval(a) => print_json(&commands::eval::execute(&commands::eval::resolve_args(a)?)?),
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code. Errors go to standard error as one JSON line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let msg = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(msg).to_line());
            return 1;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}
