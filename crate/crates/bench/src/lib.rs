//! Experiment harness for template SVMs on a simulated memtransistor
//! crossbar: configuration, the train/fold/evaluate pipeline, benchmark
//! tables, noise sweeps, energy reports and decision-region grids.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{ConfigArgs, DatasetSource, ExperimentConfig, SweepParam, TemplatePolicy};
pub use error::{BenchError, Result};
