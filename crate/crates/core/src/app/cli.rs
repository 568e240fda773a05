use std::path::PathBuf;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Spectral, resonance and Morse analysis plus the certificate.
    Analyze,
    /// Analysis plus the critical-point search.
    Solve,
    /// Residuals of a sampled solution given with --solution.
    Verify,
    /// Determinant, Morse index and certificate over a parameter grid.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    A,
    B,
}

/// Analysis and solvers for impulsive two-point boundary value problems.
#[derive(Debug, Clone, Parser)]
#[command(name = "impulse-morse", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,

    /// Problem file (TOML).
    #[arg(long, value_name = "FILE")]
    pub problem: PathBuf,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Multistart seed; overrides `solver.seed` from the file.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads (default: number of processors).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Solution samples to verify: CSV with header `x,u`.
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,

    /// Largest residual accepted by `verify` and `solve`.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,

    /// Record wall-clock time in report.json (makes the report non-reproducible).
    #[arg(long)]
    pub timing: bool,

    #[arg(long, value_enum, default_value = "b")]
    pub sweep_param: SweepParam,

    /// 0-based index into `a` or `b`.
    #[arg(long, default_value_t = 0)]
    pub sweep_index: usize,

    /// `LO:HI`.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_range: Option<String>,

    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 81)]
    pub sweep_steps: usize,

    /// Second swept parameter, for a 2-parameter family.
    #[arg(long, value_enum)]
    pub sweep2_param: Option<SweepParam>,

    #[arg(long, default_value_t = 0)]
    pub sweep2_index: usize,

    #[arg(long, allow_hyphen_values = true)]
    pub sweep2_range: Option<String>,

    #[arg(long, default_value_t = 81)]
    pub sweep2_steps: usize,
}
