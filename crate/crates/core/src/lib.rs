//! Phillips-curve forecasting toolkit.
//!
//! Builds backward, forward and hybrid Phillips-curve designs from a
//! quarterly dataset, runs an expanding-window forecasting horse race over
//! linear and tree-ensemble models, scores and compares the forecasts,
//! explains fitted models (permutation importance, PDP/ICE, Shapley values
//! and Shapley regression) and wraps forecasts in windowed conformal
//! prediction intervals.

pub mod backtest;
pub mod cli;
pub mod config;
pub mod conformal;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod rng;
pub mod trend;

pub use error::{Error, Result};
