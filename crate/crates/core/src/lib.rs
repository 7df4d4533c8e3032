pub mod cli;
pub mod cohort;
pub mod error;
pub mod eval;
pub mod outliers;
pub mod pipeline;
pub mod regression;
pub mod service;
pub mod smoothing;
pub mod tuning;

pub use error::{Error, Result};
