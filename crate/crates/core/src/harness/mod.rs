//! Experiment orchestration: training epochs interleaved with greedy
//! evaluation, multi-seed aggregation and result files.

mod config;
mod run;
mod suite;
mod svg;

pub use config::{ExperimentConfig, KEYS};
pub use run::{evaluate, run_seed, success_rate, EpochMetrics, RunState, SeedRun, TargetRange};
pub use suite::{
    aggregate, aggregate_csv, run_all, run_suite, seed_csv, summary_csv, version_string,
    write_outputs, AlgoSummary, EpochAggregate, SuiteSummary, AGGREGATE_CSV_HEADER,
    SEED_CSV_HEADER, SUMMARY_CSV_HEADER,
};
pub use svg::{render_chart, Series};
