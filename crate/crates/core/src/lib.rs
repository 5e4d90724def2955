//! Binary classification under bounded instance- and label-dependent label
//! noise.
//!
//! The pipeline estimates the noisy class posterior, keeps the examples whose
//! label can be certified from that estimate and an upper bound on the flip
//! rates, adds a few randomly chosen examples labeled by an oracle, corrects
//! the resulting covariate shift with kernel mean matching, and fits an
//! importance-weighted logistic regression.
//!
//! ```
//! use biln::harness::{ExperimentConfig, Method, run_experiment};
//!
//! let cfg = ExperimentConfig {
//!     methods: vec![Method::Noisy, Method::AutoAct],
//!     trials: 2,
//!     ..ExperimentConfig::default()
//! };
//! let report = run_experiment(&cfg).unwrap();
//! assert!(report.mean(Method::AutoAct).unwrap() > 50.0);
//! ```

pub mod data;
pub mod distill;
pub mod error;
pub mod harness;
pub mod kmm;
pub mod learner;
pub mod logistic;
pub mod math;
pub mod neighbors;
pub mod rng;
pub mod synthetic;

pub use data::{Label, LabeledSample, SampleKind};
pub use error::{Error, Result};
