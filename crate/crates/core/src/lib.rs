//! Multivariate monthly forecasting toolkit: an ELU feed-forward network,
//! closed-form ridge regression, and ARIMA with drift, plus the metrics,
//! Diebold-Mariano test, and grid harness used to compare them.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a > b)` deliberately treats NaN as failing

pub mod arima;
pub mod dataset;
pub mod error;
pub mod evalkit;
pub mod ffnet;
pub mod fmt;
pub mod harness;
pub mod numkit;
pub mod par;
pub mod ridge;

pub use error::{Error, Result};
