//! Declarative experiments: a JSON config in, artifacts on disk out.

pub mod config;
pub mod run;

pub use config::{EnvironmentConfig, Environment, ExperimentConfig, LearnerKind, CONFIG_VERSION};
pub use run::{
    artifacts, compare_learners, execute, run_experiment, CheckpointRow, ComparisonRow, EvaluationSummary,
    ExperimentResult, RunSummary, TablesDocument, COMPARISON_FILE,
};
