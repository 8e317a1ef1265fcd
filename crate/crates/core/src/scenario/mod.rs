//! Scenario configuration, trace ingestion, the long-run feedback loop,
//! short-run sweeps and report emission.

pub mod build;
pub mod config;
pub mod ingest;
pub mod report;
pub mod runner;
pub mod synth;

pub use config::{Config, Expectation};
pub use ingest::{ingest_traces, PeriodSeries, Traces};
pub use report::{Format, Manifest, Table};
pub use runner::{
    payback_table, run_long_run, run_long_runs, run_short_run_sweep, step, ExogenousPath, Outlook, PaybackRow, RunStatus,
    ScenarioResult, StepOutcome, Study, SweepCell, SweepResult, SystemState, YearMetrics, YearRecord,
};
