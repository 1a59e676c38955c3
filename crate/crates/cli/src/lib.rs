//! Command-line front end: `simulate`, `fit`, `evaluate` and `benchmark`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 non-converged mode
//! optimization, 4 numerical or internal failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Outcome;
use commands::{benchmark, evaluate, fit, simulate};
use config::{render_section, ConfigFile};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "nlp-select", version, about = "Bayesian variable selection for logistic regression with hyper-pMOM priors")]
pub struct Cli {
    /// Worker threads for scoring and replicates (0 = all cores)
    #[arg(long, global = true, env = "NLP_SELECT_THREADS")]
    pub threads: Option<usize>,
    /// TOML file with [simulate], [fit], [evaluate] or [benchmark] tables
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw seeded train/test replicates
    Simulate(simulate::SimulateArgs),
    /// Search for the posterior-mode model of a dataset
    Fit(fit::FitArgs),
    /// Score selections against the true support
    Evaluate(evaluate::EvaluateArgs),
    /// Compare the search effort of SSS and RSSS over a grid of p
    Benchmark(benchmark::BenchmarkArgs),
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("cannot start {n} worker threads: {e}")))
}

fn print(text: &str) -> Result<Outcome> {
    commands::write_text(None, text)?;
    Ok(Outcome::Done)
}

/// Resolves configuration layers and runs the chosen subcommand.
pub fn run(cli: Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Simulate(flags) => {
            let args = flags.or(file.simulate.unwrap_or_default()).or(simulate::SimulateArgs::defaults());
            if cli.print_config {
                return print(&render_section("simulate", &args)?);
            }
            simulate::run(&args)
        }
        Command::Fit(flags) => {
            let args = flags.or(file.fit.unwrap_or_default()).or(fit::FitArgs::defaults());
            if cli.print_config {
                let (n, p) = fit::data_shape(&args)?;
                return print(&render_section("fit", &fit::with_data_defaults(args, n, p))?);
            }
            fit::run(&args)
        }
        Command::Evaluate(flags) => {
            let args = flags.or(file.evaluate.unwrap_or_default()).or(evaluate::EvaluateArgs::defaults());
            if cli.print_config {
                return print(&render_section("evaluate", &args)?);
            }
            evaluate::run(&args)
        }
        Command::Benchmark(flags) => {
            let args = flags.or(file.benchmark.unwrap_or_default()).or(benchmark::BenchmarkArgs::defaults());
            if cli.print_config {
                return print(&render_section("benchmark", &args)?);
            }
            benchmark::run(&args)
        }
    }
}
