//! Command-line front end: scenario files in, CSV/JSON artifacts and a run
//! manifest out.

pub mod config;
pub mod manifest;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ScenarioConfig;
pub use manifest::RunManifest;

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "roentgen", version, about = "Emission spectra and rates of a moving two-level atom")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Momentum-averaged spectral density along the configured direction.
    Spectrum(CommonArgs),
    /// Directional emission probability over a frequency window.
    Probability(CommonArgs),
    /// Cutoff scans and growth classes for the three coupling variants.
    Divergence(CommonArgs),
    /// Golden-rule rate tables and the limit-ordering comparison.
    Rates(CommonArgs),
    /// Angular emission pattern and its sphere integral.
    Pattern(CommonArgs),
    /// Discrete-mode evolution compared with the single-pole result.
    Oracle(CommonArgs),
}

impl Command {
    pub fn parts(&self) -> (&'static str, &CommonArgs) {
        match self {
            Command::Spectrum(a) => ("spectrum", a),
            Command::Probability(a) => ("probability", a),
            Command::Divergence(a) => ("divergence", a),
            Command::Rates(a) => ("rates", a),
            Command::Pattern(a) => ("pattern", a),
            Command::Oracle(a) => ("oracle", a),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Relative quadrature tolerance; overrides `tolerances.rel_tol`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for randomized checks; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs one subcommand. Returns the manifest written to the output
/// directory.
pub fn run(command: &Command) -> Result<RunManifest> {
    let (name, args) = command.parts();
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(tol) = args.tol {
        config.tolerances.rel_tol = tol;
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("roentgen-out"));
    let seed = config.seed.unwrap_or(0);
    let ctx = run::RunContext {
        subcommand: name,
        config,
        out: &out,
        seed,
    };
    match args.threads {
        Some(0) => Err(Error::invalid("threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run::execute(ctx)),
        None => run::execute(ctx),
    }
}
