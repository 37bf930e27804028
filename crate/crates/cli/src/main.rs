//! Experiment runner for the regularity laboratory.
//!
//! Subcommands read a JSON config and write a `report.json` (plus field
//! files and CSV profiles) into the output directory. Exit codes:
//! 0 success, 2 validation error, 3 solver non-convergence, 4 I/O error.

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::Ctx;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Solver(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation: {m}"),
            CliError::Solver(m) => write!(f, "solver: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config path.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports, fields and profiles.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent probe points.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Seed override for sampling plans.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Parser)]
#[command(
    name = "plaplab",
    about = "Solve p-Laplacian-type problems and measure pointwise decay exponents at critical points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a Dirichlet problem and write the solution field.
    Solve(RunArgs),
    /// Detect the singular set of a field and fit decay exponents.
    Probe(RunArgs),
    /// Evaluate Dini admissibility and the structural bounds.
    Check(RunArgs),
    /// Sample a closed-form oracle to a field file.
    Oracle(RunArgs),
    /// Solve, probe and check in one run with an aggregate verdict.
    Pipeline(RunArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, which) = match &cli.command {
        Command::Solve(a) => (a, "solve"),
        Command::Probe(a) => (a, "probe"),
        Command::Check(a) => (a, "check"),
        Command::Oracle(a) => (a, "oracle"),
        Command::Pipeline(a) => (a, "pipeline"),
    };
    let ctx = Ctx { out_dir: &args.out, threads: args.threads.max(1), seed: args.seed };
    let report = match which {
        "solve" => commands::cmd_solve(&config::load(&args.config)?, &ctx)?,
        "probe" => commands::cmd_probe(&config::load(&args.config)?, &ctx)?,
        "check" => commands::cmd_check(&config::load(&args.config)?, &ctx)?,
        "oracle" => commands::cmd_oracle(&config::load(&args.config)?, &ctx)?,
        "pipeline" => commands::cmd_pipeline(&config::load(&args.config)?, &ctx)?,
        _ => unreachable!(),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("report: {}", args.out.join("report.json").display());
    if let Some(v) = &report.verdict {
        println!("verdict: {v}");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
