//! `rsnl`: command-line driver for the nonlocal fractional Rayleigh-Stokes
//! solver. Every subcommand reads one JSON config and writes plot-ready CSV or
//! JSON into the output directory.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration, 3 quadrature failure,
//! 4 violated hard bound, 5 orthogonality violation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(
    name = "rsnl",
    version,
    about = "Time-nonlocal fractional Rayleigh-Stokes solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "RSNL_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Tabulate B, its error estimate and dB/dt over the kernel grid.
    EvalKernel,
    /// Check the kernel bounds; exits 4 if a hard bound fails.
    VerifyBounds,
    /// Solve the nonlocal problem and check the result.
    Solve,
    /// Conditioning tables for each configured beta.
    SweepBeta,
    /// Report the resonant set for the configured beta.
    FindK0,
    /// Compare the quadrature kernel with time stepping.
    OracleCompare,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rsnl_core::Error),
    #[error("hard bound violated: {0}")]
    BoundViolation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use rsnl_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Core(E::Quadrature(_) | E::TailTooLarge { .. } | E::NonFinite(_)) => 3,
            Self::Core(E::OrthogonalityViolation { .. }) => 5,
            Self::Core(_) => 2,
            Self::BoundViolation(_) => 4,
            Self::Io(_) | Self::Json(_) => 1,
        }
    }

    /// Extra machine-readable detail for stderr.
    fn payload(&self) -> Option<serde_json::Value> {
        match self {
            Self::Core(rsnl_core::Error::OrthogonalityViolation { modes, tolerance }) => {
                Some(serde_json::json!({
                    "error": "orthogonality_violation",
                    "tolerance": tolerance,
                    "modes": modes.iter().map(|m| serde_json::json!({"k": m.k, "psi": m.psi})).collect::<Vec<_>>(),
                }))
            }
            _ => None,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let (cfg, base) = config::RunConfig::load(path)?;
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::EvalKernel => commands::eval_kernel(&cfg, out),
        Command::VerifyBounds => commands::verify_bounds(&cfg, out),
        Command::Solve => commands::solve(&cfg, &base, out),
        Command::SweepBeta => commands::sweep_beta(&cfg, &base, out),
        Command::FindK0 => commands::find_k0(&cfg, &base, out),
        Command::OracleCompare => commands::oracle_compare(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rsnl: {e}");
            if let Some(p) = e.payload() {
                eprintln!("{p}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
