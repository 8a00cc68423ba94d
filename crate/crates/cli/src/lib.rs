//! Command-line front end for `gradflow`.
//!
//! Every command prints one JSON [`report::Report`] on stdout. Failures go to
//! stderr with an exit code from [`error::CliError`].

pub mod commands;
pub mod error;
pub mod input;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gradflow::{Method, DEFAULT_TOL};

pub use error::CliError;
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "gradflow", version, about = "Gradient-flow analysis of linear ODEs x' = Ax")]
pub struct Cli {
    /// Relative tolerance for all numerical decisions.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Number of sampled points or pairs.
    #[arg(long, global = true, default_value_t = 1000)]
    pub samples: usize,

    /// Output file: the system JSON for `synthesize`, the CSV for `simulate`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide real diagonalisability and report the spectrum.
    Analyze { matrix: PathBuf },
    /// Build the canonical gradient system (K, B, π) of a matrix.
    Synthesize { matrix: PathBuf },
    /// Check A = −KB for a matrix against a system file.
    Verify { matrix: PathBuf, system: PathBuf },
    /// Integrate a system file and audit energy dissipation.
    Simulate {
        system: PathBuf,
        /// Initial state, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Second initial state; enables the contraction check.
        #[arg(long, allow_hyphen_values = true)]
        x0_pair: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Step size (or τ for `mm`); defaults to t_end / 200.
        #[arg(long)]
        step: Option<f64>,
        /// exact, rk4 or mm.
        #[arg(long, default_value = "exact")]
        method: Method,
    },
    /// Convexity constants and sampled convexity/contraction certificates.
    Convexity { system: PathBuf },
    /// Markov generators in the transposed convention (columns sum to zero).
    Markov {
        #[command(subcommand)]
        action: MarkovCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum MarkovCommand {
    /// Check rates and column sums.
    Validate { generator: PathBuf },
    /// Stationary distribution.
    Stationary { generator: PathBuf },
    /// Detailed-balance test.
    Reversible { generator: PathBuf },
    /// Sample Ax = −K(x)DF(x) for the entropic structure.
    EntropicVerify { generator: PathBuf },
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Parse(format!("--tol must be positive and finite, got {}", cli.tol)));
    }
    commands::dispatch(cli)
}
