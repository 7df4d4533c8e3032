//! Bayesian hierarchical smoothing of small cohorts.
//!
//! Cohorts with at least `h` values use their empirical statistics. Smaller
//! cohorts are assumed log-normal; each borrows strength from the ancestor
//! that best explains its data, and root cohorts fall back to a
//! regression-model prior.

mod ancestor;
mod lattice;
mod posterior;

use serde::{Deserialize, Serialize};

pub use ancestor::{negative_log_likelihood, select_best_ancestor};
pub use lattice::{smooth_all, NoRootPrior, RootPrior, SmoothedCohort, SmoothingOutcome};
pub use posterior::{posterior, smoothed_percentiles, PosteriorSummary, Z_90};

use crate::cohort::{CohortKey, Dimension};
use crate::error::{Error, Result};

/// Floor applied to log-variances so that degenerate (constant) cohorts
/// still define a proper distribution.
pub const MIN_LOG_VARIANCE: f64 = 1e-10;

pub const DEFAULT_H: usize = 20;
pub const DEFAULT_DELTA: f64 = 5.0;
pub const DEFAULT_ETA: f64 = 0.32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Empirical,
    Smoothed,
    RegressionPrior,
}

/// Mean and variance of log-compensation, with the sample count behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogStats {
    pub mu: f64,
    pub sigma2: f64,
    pub m: usize,
    pub provenance: Provenance,
}

impl LogStats {
    /// Mean and unbiased variance of `logs`. A single value gets the
    /// variance floor.
    pub fn from_logs(logs: &[f64]) -> Option<LogStats> {
        if logs.is_empty() {
            return None;
        }
        let n = logs.len() as f64;
        let mu = logs.iter().sum::<f64>() / n;
        let var = if logs.len() > 1 {
            logs.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(LogStats {
            mu,
            sigma2: var.max(MIN_LOG_VARIANCE),
            m: logs.len(),
            provenance: Provenance::Empirical,
        })
    }

    pub fn empirical(values: &[f64]) -> Option<LogStats> {
        Self::from_logs(&logs(values))
    }
}

pub fn logs(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v.ln()).collect()
}

/// Ancestor discount `delta`, precision-prior strength `eta` and the
/// smoothing threshold `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub delta: f64,
    pub eta: f64,
    pub h: usize,
}

impl SmoothingParams {
    pub fn new(delta: f64, eta: f64, h: usize) -> Result<Self> {
        if !(delta > 0.0 && eta > 0.0 && delta.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta and eta must be positive and finite, got ({delta}, {eta})"
            )));
        }
        if h < 2 {
            return Err(Error::InvalidParameter(format!("h must be at least 2, got {h}")));
        }
        Ok(SmoothingParams { delta, eta, h })
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            delta: DEFAULT_DELTA,
            eta: DEFAULT_ETA,
            h: DEFAULT_H,
        }
    }
}

/// `(delta, eta)` for cohorts refined by `dimension`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentOverride {
    pub dimension: Dimension,
    pub delta: f64,
    pub eta: f64,
}

/// Global parameters plus per-segment overrides; the first override whose
/// dimension the key carries wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub global: SmoothingParams,
    pub segments: Vec<SegmentOverride>,
}

impl SmoothingConfig {
    pub fn uniform(params: SmoothingParams) -> Self {
        SmoothingConfig {
            global: params,
            segments: Vec::new(),
        }
    }

    pub fn params_for(&self, key: &CohortKey) -> SmoothingParams {
        self.segments
            .iter()
            .find(|s| key.has(s.dimension))
            .map(|s| SmoothingParams {
                delta: s.delta,
                eta: s.eta,
                h: self.global.h,
            })
            .unwrap_or(self.global)
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            global: SmoothingParams::default(),
            segments: vec![SegmentOverride {
                dimension: Dimension::Company,
                delta: 250.0,
                eta: 0.04,
            }],
        }
    }
}
