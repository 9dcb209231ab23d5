//! Experiment plumbing: scenario catalog, configuration, replication runner,
//! capacity-learning studies and result files.

pub mod config;
pub mod output;
pub mod runner;
pub mod sample_complexity;
pub mod scenario;

pub use config::{ArmEntry, DistributionName, ExperimentConfig, DEFAULT_REPS};
pub use output::{csv_string, parse_csv, serialize_results, sidecar_json, sidecar_path, CsvRow, CSV_HEADER};
pub use runner::{
    replication_rngs, run_experiment, run_replication, time_grid, ExperimentResult, PolicyFailure, PolicyTrace,
    Replication, RunMetadata,
};
pub use sample_complexity::{
    ci_width_table, log_grid, sample_bound, sample_complexity_experiment, CiRow, SampleComplexityConfig,
    SampleComplexityReport, StoppingRecord,
};
pub use scenario::{builtin_scenario, scenario_hash, SCENARIOS};
