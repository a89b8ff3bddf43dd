//! Experiment engine: ingestion, configuration, Monte Carlo sweeps, reports
//! and timing.

pub mod bench;
pub mod config;
pub mod csvio;
pub mod dispersion;
pub mod experiment;
pub mod report;

pub use bench::{timing_benchmark, BenchSettings, TimingRow};
pub use config::{ExperimentConfig, MethodSpec};
pub use csvio::{load_csv, write_csv, ColumnRef};
pub use dispersion::{probability_dispersion, Dispersion};
pub use experiment::{empirical_mse, run_experiment, ExperimentReport, Record};
pub use report::{emit_report, ReportFormat};

use crate::error::Error;

/// Process exit status for a failed command: 2 for bad input, 3 for a
/// numerical failure, 4 when too many replications failed.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SingularGram { .. }
        | Error::EmptyDraw
        | Error::DegenerateGradients
        | Error::DivisionByZeroProb { .. } => 3,
        Error::ExcessiveFailures { .. } => 4,
        _ => 2,
    }
}
