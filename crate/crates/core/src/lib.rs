//! Martingale-posterior uncertainty quantification by iterated parametric
//! bootstrap, with reference models, baselines and evaluation metrics.

pub mod baselines;
pub mod data;
pub mod engine;
pub mod error;
pub mod expfam;
pub mod gp;
pub mod harness;
pub mod linalg;
pub mod lingauss;
pub mod metrics;
pub mod rng;

pub use data::{Dataset, Samples};
pub use engine::{run_ensemble, EnsembleResult, Estimator, MpRunConfig};
pub use error::{Error, Result};
