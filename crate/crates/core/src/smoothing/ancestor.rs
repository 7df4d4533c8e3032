use std::cmp::Ordering;
use std::f64::consts::PI;

use super::LogStats;
use crate::cohort::CohortKey;
use crate::error::{Error, Result};

/// Negative log-likelihood of `y_logs` under `N(stats.mu, stats.sigma2)`.
pub fn negative_log_likelihood(y_logs: &[f64], stats: &LogStats) -> f64 {
    let n = y_logs.len() as f64;
    let ss: f64 = y_logs.iter().map(|y| (y - stats.mu) * (y - stats.mu)).sum();
    0.5 * n * (2.0 * PI * stats.sigma2).ln() + ss / (2.0 * stats.sigma2)
}

/// The candidate that best explains `y_logs`, by minimum negative
/// log-likelihood. Ties go to the candidate with fewer refinements, then to
/// the smaller key.
pub fn select_best_ancestor(y_logs: &[f64], candidates: &[(CohortKey, LogStats)]) -> Result<(CohortKey, LogStats)> {
    candidates
        .iter()
        .map(|(k, s)| (negative_log_likelihood(y_logs, s), k, s))
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.level().cmp(&b.1.level()))
                .then_with(|| a.1.cmp(b.1))
        })
        .map(|(_, k, s)| (k.clone(), *s))
        .ok_or(Error::NoAncestor)
}
