use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use complf::cli;
use complf::rewrite::DEFAULT_FUEL;

#[derive(Parser)]
#[command(name = "complf", version, about = "Type checker and evaluator for computational dependent type theories")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,

    /// Rewrite step budget shared across the run.
    #[arg(long, global = true, env = "COMPLF_FUEL", default_value_t = DEFAULT_FUEL)]
    fuel: u64,

    /// Print progress and inferred types.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a theory file and type-check its definitions.
    Check {
        file: PathBuf,
        /// Re-verify every elaboration with the declarative checker.
        #[arg(long)]
        oracle_crosscheck: bool,
    },
    /// Validate a theory file and normalize its `eval` declarations.
    Eval { file: PathBuf },
    /// Report non-left-linear rules and overlapping rule pairs.
    Lint { file: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    // Normalization and checking recurse on term depth; deep numerals need
    // far more stack than the default main thread provides.
    let code = std::thread::Builder::new()
        .stack_size(512 * 1024 * 1024)
        .spawn(move || match args.cmd {
            Cmd::Check {
                file,
                oracle_crosscheck,
            } => cli::run_check(&file, args.fuel, args.verbose, oracle_crosscheck),
            Cmd::Eval { file } => cli::run_eval(&file, args.fuel, args.verbose),
            Cmd::Lint { file } => cli::run_lint(&file, args.fuel, args.verbose),
        })
        .expect("spawn worker thread")
        .join()
        .expect("worker thread panicked");
    ExitCode::from(code as u8)
}
