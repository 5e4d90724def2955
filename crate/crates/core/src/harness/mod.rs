//! Experiment orchestration: configs, seeded trials, reports and the
//! randomized guarantee checks behind `biln validate-theorems`.

pub mod config;
pub mod experiment;
pub mod report;
pub mod theorems;

pub use config::{Dataset, ExperimentConfig, KmmSettings, Method, OracleSource};
pub use experiment::{k_sweep, prepare_trial, run_experiment, DataSource, TrialContext, TrialData};
pub use report::{KSweep, MethodSummary, TrialReport};
