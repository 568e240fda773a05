//! Command-line front end: problem files, the four pipelines and their
//! artifacts (`report.json`, `solution_<i>.csv`, `sweep.csv`, `verify.json`).

mod cli;
mod commands;
pub mod problem_file;
pub mod report;
mod samples;

use std::path::PathBuf;
use std::process::ExitCode;

pub use cli::{Args, Command, SweepParam};
pub use commands::{
    analyze_report, find_critical_points, run, run_sweep, solve_threshold, SweepRow,
};
pub use problem_file::{parse_problem_file, parse_problem_str, ParsedProblem, ProblemFile};
pub use report::{format_float, to_json, PointSummary, RunReport, SolverSection};
pub use samples::{read_solution_csv, write_solution_csv, SOLUTION_ROWS};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("verification failed: largest residual {max:e} above threshold {threshold:e}")]
    VerificationFailed { max: f64, threshold: f64 },
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } => 1,
            Self::Parse { .. } | Self::Schema(_) => 2,
            Self::NoConvergence(_) => 3,
            Self::VerificationFailed { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }
}

/// Runs the CLI and maps errors to exit codes.
pub fn main_with(args: Args) -> ExitCode {
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
