//! Deep imbalanced binary classification on tabular data.
//!
//! The crate trains small fully-connected networks with either the usual
//! empirical-risk objective or a group-DRO objective that always steps on the
//! worst class, compares them against classical resampling and reweighting
//! baselines, and runs the nonparametric comparison pipeline used to rank
//! methods across datasets.
//!
//! Module map:
//!
//! - [`nn`]: dense layers, batch norm, dropout, softmax cross-entropy, Adam.
//! - [`objectives`]: ERM and group-DRO steps, and the early-stopping loop.
//! - [`imbalance`]: ROS, RUS, RUSROS and cost weights.
//! - [`data`]: KEEL/CSV loading, profiling, standardization and splits.
//! - [`metrics`]: F1, g-mean, ROC-AUC and PR-AUC.
//! - [`stats`]: ranks, Friedman, Wilcoxon, Holm and CD diagrams.
//! - [`harness`]: experiment configuration, tuning, runs and reports.

pub mod data;
pub mod error;
pub mod harness;
pub mod imbalance;
pub mod metrics;
pub mod nn;
pub mod objectives;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use nn::Matrix;
