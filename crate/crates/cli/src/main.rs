//! `assistfair`: simulate, tabulate and verify machine-assisted decisions.
//!
//! Exit codes: 0 success, 1 claim or simulation failure, 2 usage,
//! configuration or precondition error.

mod commands;
mod config;
mod exit;
mod svg;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use assistfair::model::{DerivedExampleParams, ExampleParams};
use assistfair::verify::ClaimId;
use clap::{Args, Parser, Subcommand};

use commands::Status;
use config::ExperimentConfig;
use exit::CliError;

/// Caps the rayon worker count.
const THREADS_ENV: &str = "ASSISTFAIR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "assistfair", version, about = "Machine-assisted human decisions: simulation and verification")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replications; overrides the config.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Minimum success fraction for `verify`; overrides the config.
    #[arg(long, global = true)]
    level: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo expected disparities and risks of the selected rules.
    Simulate,
    /// Exact expected disparities and risks in the balanced example.
    ClosedForm(ExampleArgs),
    /// Empirical check of one ordering claim.
    Verify {
        /// remark1, remark2, remark3, thm1, cor1, thm2 or consistency.
        claim: ClaimId,
    },
    /// Simulate over a grid of parameter values.
    Sweep,
}

/// Balanced example parameters. Defaults come from `--config` when given,
/// otherwise σ²=τ²=1, n=8, δ=1, Δμ=β̄=μ̄=0.
#[derive(Debug, Args)]
struct ExampleArgs {
    #[arg(long)]
    sigma_sq: Option<f64>,
    #[arg(long)]
    tau_sq: Option<f64>,
    /// Total training size (even).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_mu: Option<f64>,
    #[arg(long)]
    beta_bar: Option<f64>,
    #[arg(long)]
    mu_bar: Option<f64>,
}

impl ExampleArgs {
    fn apply(&self, base: ExampleParams) -> ExampleParams {
        ExampleParams {
            sigma_sq: self.sigma_sq.unwrap_or(base.sigma_sq),
            tau_sq: self.tau_sq.unwrap_or(base.tau_sq),
            n: self.n.unwrap_or(base.n),
            delta: self.delta.unwrap_or(base.delta),
            delta_mu: self.delta_mu.unwrap_or(base.delta_mu),
            beta_bar: self.beta_bar.unwrap_or(base.beta_bar),
            mu_bar: self.mu_bar.unwrap_or(base.mu_bar),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n = raw
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(anyhow!("{THREADS_ENV} must be a positive integer (got {raw:?})")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::failure)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::usage(anyhow!("--config <path> is required")))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(reps) = cli.reps {
        config.reps = reps;
    }
    if let Some(level) = cli.level {
        config.level = level;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<Status, CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate => {
            let config = load_config(&cli)?;
            commands::simulate(&config, &commands::out_dir(cli.out.clone(), Some(&config)))
        }
        Command::ClosedForm(args) => {
            let (base, out) = match &cli.config {
                Some(_) => {
                    let config = load_config(&cli)?;
                    let p = DerivedExampleParams::derive_full(&config.spec, config.prior(), &config.training())?;
                    (p, cli.out.clone().or(config.out))
                }
                None => (
                    ExampleParams {
                        sigma_sq: 1.0,
                        tau_sq: 1.0,
                        n: 8,
                        delta: 1.0,
                        delta_mu: 0.0,
                        beta_bar: 0.0,
                        mu_bar: 0.0,
                    },
                    cli.out.clone(),
                ),
            };
            commands::closed_form(&args.apply(base), out.as_deref())
        }
        Command::Verify { claim } => {
            let config = load_config(&cli)?;
            commands::verify(*claim, &config, &commands::out_dir(cli.out.clone(), Some(&config)))
        }
        Command::Sweep => {
            let config = load_config(&cli)?;
            sweep::sweep(&config, &commands::out_dir(cli.out.clone(), Some(&config)))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::ClaimFailed) => ExitCode::from(exit::FAILURE),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            e.exit_code()
        }
    }
}
