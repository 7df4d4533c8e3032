use serde::{Deserialize, Serialize};

use super::{LogStats, SmoothingParams};
use crate::cohort::Percentiles;
use crate::error::{Error, Result};

/// z-score used for the 10th/90th percentiles of the log-normal.
pub const Z_90: f64 = 1.282;

/// Posterior predictive summary of a cohort's log-compensation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    /// Posterior predictive log-mean.
    pub mu_hat: f64,
    /// Posterior predictive log-variance, `(1 + 1/(n + n0)) tau2_hat`.
    pub sigma2_hat: f64,
    /// Plug-in variance, the reciprocal of the posterior mean precision.
    pub tau2_hat: f64,
    pub n: usize,
    /// Prior pseudo-count `m / delta`.
    pub n0: f64,
}

impl PosteriorSummary {
    /// Posterior mean of the precision (shape / rate of its Gamma posterior).
    pub fn precision_mean(&self) -> f64 {
        1.0 / self.tau2_hat
    }

    /// The prior alone, used when a cohort has no observations.
    pub fn from_prior(prior: &LogStats) -> Self {
        PosteriorSummary {
            mu_hat: prior.mu,
            sigma2_hat: prior.sigma2,
            tau2_hat: prior.sigma2,
            n: 0,
            n0: prior.m as f64,
        }
    }
}

/// Conjugate normal / Gamma update of a cohort's log values against the
/// statistics of its chosen ancestor.
///
/// The prior is `nu | tau2 ~ N(mu, tau2 / n0)` and
/// `1 / tau2 ~ Gamma(shape = eta / sigma2, rate = eta)`, with `n0 = m / delta`.
pub fn posterior(y_logs: &[f64], ancestor: &LogStats, params: &SmoothingParams) -> Result<PosteriorSummary> {
    if y_logs.is_empty() {
        return Err(Error::NoObservations);
    }
    if !(ancestor.sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ancestor variance must be positive, got {}",
            ancestor.sigma2
        )));
    }
    let n = y_logs.len() as f64;
    let n0 = ancestor.m as f64 / params.delta;
    let y_bar = y_logs.iter().sum::<f64>() / n;
    let ss: f64 = y_logs.iter().map(|y| (y - y_bar) * (y - y_bar)).sum();
    let gap = y_bar - ancestor.mu;

    let rate = params.eta + 0.5 * ss + n * n0 / (2.0 * (n + n0)) * gap * gap;
    let shape = n / 2.0 + params.eta / ancestor.sigma2;
    let tau2_hat = rate / shape;

    let mu_hat = (n * y_bar + n0 * ancestor.mu) / (n + n0);
    let sigma2_hat = (1.0 + 1.0 / (n + n0)) * tau2_hat;
    Ok(PosteriorSummary {
        mu_hat,
        sigma2_hat,
        tau2_hat,
        n: y_logs.len(),
        n0,
    })
}

/// p10 / median / p90 of the posterior predictive log-normal.
pub fn smoothed_percentiles(summary: &PosteriorSummary) -> Percentiles {
    let sigma_hat = summary.sigma2_hat.sqrt();
    Percentiles {
        p10: (summary.mu_hat - Z_90 * sigma_hat).exp(),
        median: summary.mu_hat.exp(),
        p90: (summary.mu_hat + Z_90 * sigma_hat).exp(),
    }
}
