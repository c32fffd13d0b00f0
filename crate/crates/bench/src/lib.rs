//! Experiment harness for the `lsketch` solvers: synthetic problems with
//! controlled conditioning, config-driven sweeps, CSV and JSON reports, and
//! plain CSV matrix files.

pub mod error;
pub mod experiment;
pub mod matrix_io;
pub mod problem;
pub mod report;
pub mod verify;

pub use error::{BenchError, ConfigError, Result};
pub use experiment::{run_experiment, run_experiment_file, run_problem, ExperimentConfig, RunSettings};
pub use matrix_io::{load_matrix_csv, save_matrix_csv};
pub use problem::{gen_problem, ProblemKind, ProblemSpec};
pub use report::{ExperimentReport, Format, Method, ReportRow};
