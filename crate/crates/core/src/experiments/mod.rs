//! Pipelines that turn scenarios into metric CSVs, plus the command line.

pub mod acceptance;
mod aggregate;
mod cli;
mod figures;

pub use aggregate::{
    aggregate, csv_field, format_float, metrics_to_csv, oracle_to_csv, settle_step, summaries_to_json, summarize,
    Aggregate, EstimationMode, SeriesSummary, DEFAULT_WINDOW, METRICS_HEADER, ORACLE_HEADER, SETTLE_TOL, SUMMARY_SPAN,
};
pub use cli::{cli_main, cli_run, SweepSpec, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, OUT_ENV};
pub use figures::{run_figure, run_scenario, slug, Figure, FigurePlan, FigureRun, ScenarioRun};
