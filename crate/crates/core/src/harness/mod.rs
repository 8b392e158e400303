//! Experiment orchestration: configuration, paired runs across algorithms
//! and replicas, persistence and reports.

mod checkpoint;
mod config;
mod report;
mod run;

pub use checkpoint::{inspect_checkpoint, Checkpoint, CheckpointSummary, ReservoirHeader, CHECKPOINT_VERSION};
pub use config::{
    parse_config, ConfigFile, ExperimentConfig, Precision, Preset, PrelearnParams, TaskKind, TaskParams,
    OUTPUT_ROOT_ENV, SURROGATE_STIMULI,
};
pub use report::{report, write_summary_csv, Report, ReportRow, SeriesPoint, Stat};
pub use run::{execute, run_experiment, run_experiment_in, ArmRecord, ArmSummary, RunPaths, RunRecord};
