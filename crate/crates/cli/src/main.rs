mod commands;
mod config;
mod model;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use symmetrix::QuadratureRule;

use commands::RunContext;
use config::RunConfig;

/// Optimal Bayesian estimation of location-isomorphic parameters.
#[derive(Debug, Parser)]
#[command(name = "symmetrix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed for `simulate`, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Gauss-Legendre order, overriding the configuration.
    #[arg(long, global = true)]
    quad_order: Option<usize>,

    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal measurement, estimates and errors as JSON.
    Solve,
    /// Errors over a grid of (a, alpha, beta) as CSV.
    Sweep,
    /// Errors of local (SLD) measurements across eta0 as CSV.
    Figure1,
    /// Simulated multi-shot estimation: per-shot CSV and a JSON summary.
    Simulate,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let order = cli.quad_order.unwrap_or(config.quadrature.order);
    let rule = QuadratureRule::gauss_legendre(order).context("quadrature order")?;
    let tol = config.tolerances.resolve()?;
    let ctx = RunContext { config, rule, tol, seed: cli.seed, out: cli.out.clone() };

    // write to memory first so a failed run leaves no partial output file
    let mut buffer = Vec::new();
    match cli.command {
        Command::Solve => commands::solve(&ctx, &mut buffer)?,
        Command::Sweep => commands::sweep(&ctx, &mut buffer)?,
        Command::Figure1 => commands::figure1(&ctx, &mut buffer)?,
        Command::Simulate => commands::simulate(&ctx, &mut buffer)?,
    }
    match &cli.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            w.write_all(&buffer)?;
            w.flush()?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&buffer)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
