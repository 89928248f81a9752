//! Experiment orchestration: configuration, depth tuning, the k-fold by
//! repetition job matrix, aggregation and the statistical report.

mod aggregate;
mod config;
mod pool;
mod records;
mod report;
mod runner;
mod tune;

pub use aggregate::{aggregate, Aggregates, DatasetAggregate, MeanStd};
pub use config::{BatchSizeRule, DepthChoice, ExperimentConfig, AUTO_BATCH_MAX, AUTO_BATCH_MIN};
pub use records::{latest_by_key, read_records, ExperimentRecord, JobKey, RecordSink, RECORD_VERSION};
pub use report::{stats_report, write_stats_outputs, StatsReport};
pub use runner::{
    plan_job, resolve_workers, run_experiment, run_job, JobPlan, RunOptions, RunSummary, RECORDS_FILE, WORKERS_ENV,
};
pub use tune::{tune_architecture, DepthScore, TuneReport};
