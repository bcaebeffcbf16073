//! Explaining residual correctors through base-model parameter shifts.
//!
//! A parametric, interpretable base model is fitted, a machine-learning
//! corrector learns its residuals, and the base model is refitted on labels
//! corrected inside a neighbourhood. The resulting parameter shift and the
//! difference model `f_theta - f_theta'` explain the correction locally.
//! [`criteria`] quantifies how accurate and faithful that explanation is.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod base;
pub mod config;
pub mod correctors;
pub mod criteria;
pub mod dataset;
pub mod drag;
pub mod engine;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod newsvendor;
pub mod output;
pub mod rng;
pub mod smooth;

pub use dataset::{LabeledDataset, NeighborhoodSpec};
pub use error::{BapcError, Result};
pub use exec::Execution;
