//! Experiment configuration, dataset caching, sweeps and result export.

pub mod cache;
pub mod compare;
pub mod config;
pub mod runner;

pub use cache::{generate_dataset, resolve_cache_root, DatasetCache, CACHE_ENV};
pub use compare::{compare, load_results};
pub use config::{ExperimentConfig, Method};
pub use runner::{
    aggregate_csv, run_cell, run_experiment, ExperimentData, RunResult, SweepSummary,
};
