//! Experiment harness: configuration, input parsing, execution and traces.

pub mod config;
pub mod parse;
pub mod run;
pub mod trace;

pub use config::{ConfigValues, ExperimentConfig, ExperimentKind};
pub use parse::{parse_graph, parse_matrix, parse_program};
pub use run::{
    exit_status, game_gap_bound, run_experiment, summary_path, write_outcome, Outcome, Summary,
    FLOW_TOL,
};
pub use trace::{csv_line, fit_rate, fit_series, game_trace_csv, rate_horizons, GAME_TRACE_HEADER};
