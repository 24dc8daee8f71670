//! Missing-data imputation toolkit built around correlation-guided
//! regression models.
//!
//! The core imputer selects, for each incomplete column, the K most
//! correlated predictor columns and fits a regression model whose loss
//! combines a data-fit term with a KL-divergence penalty on the column's
//! correlation distribution, so imputed values preserve the dataset's
//! correlation structure. Mean/mode, KNN, and chained-regression baselines
//! plus a seeded missingness injector and benchmark harness round out the
//! toolkit.
//!
//! - [`dataset`] - column-major tables, CSV I/O, categorical encoders
//! - [`missingness`] - controlled injection with recorded ground truth
//! - [`correlation`] - Pearson r, predictor selection, KL machinery
//! - [`fcmi`] - the composite-loss imputer
//! - [`baselines`] - mean/mode, KNN, iterative chained regression
//! - [`eval`] - metrics and the inject/impute/score pipeline

pub mod baselines;
pub mod correlation;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fcmi;
pub mod missingness;
pub mod regression;

pub use error::{Error, Result};
