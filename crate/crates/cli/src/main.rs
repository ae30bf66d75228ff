//! `waveshrink` — a command-line lab for Bayesian wavelet shrinkage.
//!
//! Subcommands simulate observations of Besov-ball truths, denoise sampled
//! signals through spike-and-slab or sieve posteriors, measure posterior
//! contraction rates over a grid of sample sizes, probe prior small-ball
//! mass, and run fast internal self-checks. All runs are driven by a flat
//! text config (see `config`) and write their outputs, together with the
//! exact resolved config, under `--out`. Set `RAYON_NUM_THREADS` to control
//! the worker count; every artifact is a deterministic function of the
//! resolved config, so reruns are byte-identical.

mod config;
mod emit;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, LabConfig};
use crate::run::Estimator;

#[derive(Debug, Parser)]
#[command(name = "waveshrink", version, about = "Bayesian wavelet shrinkage lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file; omit to run with the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files (created if missing, contents overwritten).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override `section.key = value`; repeatable, applied in order.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Override the seed, taking precedence over the config and `--set`.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<LabConfig> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => String::new(),
        };
        let mut cfg = parse_config(&text, &self.set)?;
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a truth from its Besov-ball spec and observe it in white noise.
    Simulate(RunArgs),
    /// Shrink a sampled signal (one value per line) through the posterior.
    Denoise {
        /// Input signal file, one finite value per line.
        input: PathBuf,
        /// Posterior summary to reconstruct from.
        #[arg(long, value_enum, default_value = "mean")]
        estimator: Estimator,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Measure the posterior contraction rate over the sample-size grid.
    Rate(RunArgs),
    /// Probe prior small-ball mass along the grid via importance sampling.
    PriorMass(RunArgs),
    /// Run fast internal self-checks and exit nonzero on any failure.
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => {
            args.resolve().and_then(|cfg| run::run_simulate(&cfg, &args.out))
        }
        Command::Denoise { input, estimator, args } => {
            args.resolve().and_then(|cfg| run::run_denoise(&cfg, input, *estimator, &args.out))
        }
        Command::Rate(args) => args.resolve().and_then(|cfg| run::run_rate(&cfg, &args.out)),
        Command::PriorMass(args) => {
            args.resolve().and_then(|cfg| run::run_prior_mass(&cfg, &args.out))
        }
        Command::Check => run::run_check(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
