//! Config-driven experiment runner for the `sngm-core` optimizers.

pub mod check;
pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod run;
pub mod setup;
pub mod trace;

pub use check::{check_bounds, BoundCheck, GapSource};
pub use cli::cli_main;
pub use compare::{run_comparison, Comparison};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use run::{run_experiment, run_prepared, RunOutcome, TrajectoryRecord};
pub use setup::{prepare, Setup};
pub use trace::{emit_plot_data, write_trace, write_trace_csv, PlotMetric};
