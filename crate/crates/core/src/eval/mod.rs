//! Accuracy metrics and the experiment runner.

pub mod config;
mod experiment;
mod metrics;

pub use config::{
    ClassifierKind, DatasetConfig, ExperimentConfig, ImportConfig, SuperpixelMethod, SuperpixelSettings, TrainSettings,
};
pub use experiment::{
    build_superpixels, classify_run, mean_and_std, run_experiment, run_experiment_with, run_prepared, AggregateRow,
    ExperimentOutput, PreparedDataset, ReportTable, RunMap, RunRecord,
};
pub use metrics::{confusion_and_kappa, overall_accuracy, Confusion};
