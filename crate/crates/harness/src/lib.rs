//! Experiment runner around `bmlab_core`: configuration, the replicate
//! protocol, CSV reports, throughput benchmark and SVG plots.

pub mod aggregate;
pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod report;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use experiment::{run_experiment, run_experiment_with_models, MetricsSeries};
