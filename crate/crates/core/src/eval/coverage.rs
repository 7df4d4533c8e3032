use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cohort::{empirical_quantile, CohortKey};
use crate::error::{Error, Result};
use crate::smoothing::{smooth_all, RootPrior, SmoothingConfig};
use crate::tuning::make_split;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CoverageParams {
    fn default() -> Self {
        CoverageParams { alpha: 0.1, beta: 0.9 }
    }
}

impl CoverageParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < beta && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < alpha < beta < 1, got {alpha}, {beta}"
            )));
        }
        Ok(CoverageParams { alpha, beta })
    }

    pub fn ideal(&self) -> f64 {
        self.beta - self.alpha
    }
}

/// Fractions of held-out values inside, below and above an interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: f64,
    pub below: f64,
    pub above: f64,
}

impl Coverage {
    fn of(held: &[f64], lo: f64, hi: f64) -> Self {
        let n = held.len() as f64;
        let below = held.iter().filter(|v| **v < lo).count() as f64 / n;
        let above = held.iter().filter(|v| **v > hi).count() as f64 / n;
        Coverage {
            covered: 1.0 - below - above,
            below,
            above,
        }
    }

    fn mean<'a>(items: impl Iterator<Item = &'a Coverage>) -> Coverage {
        let mut sum = Coverage::default();
        let mut n = 0.0;
        for c in items {
            sum.covered += c.covered;
            sum.below += c.below;
            sum.above += c.above;
            n += 1.0;
        }
        if n > 0.0 {
            sum.covered /= n;
            sum.below /= n;
            sum.above /= n;
        }
        sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCoverage {
    pub key: CohortKey,
    /// Cohort size before the split.
    pub n: usize,
    pub smoothed: Coverage,
    pub empirical: Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub cohorts: usize,
    pub ideal: f64,
    pub smoothed: Coverage,
    pub empirical: Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub params: CoverageParams,
    pub per_cohort: Vec<CohortCoverage>,
}

impl CoverageReport {
    /// Means over cohorts whose size lies in `sizes`.
    pub fn summary(&self, sizes: std::ops::RangeInclusive<usize>) -> CoverageSummary {
        let chosen: Vec<&CohortCoverage> = self.per_cohort.iter().filter(|c| sizes.contains(&c.n)).collect();
        CoverageSummary {
            cohorts: chosen.len(),
            ideal: self.params.ideal(),
            smoothed: Coverage::mean(chosen.iter().map(|c| &c.smoothed)),
            empirical: Coverage::mean(chosen.iter().map(|c| &c.empirical)),
        }
    }

    pub fn overall(&self) -> CoverageSummary {
        self.summary(0..=usize::MAX)
    }
}

/// Splits every cohort with `2 <= n < h`, then compares how often held-out
/// values fall between the `alpha` and `beta` quantiles computed from the
/// training part, empirically and from the smoothed posterior predictive.
pub fn coverage_test(
    cohorts: &BTreeMap<CohortKey, Vec<f64>>,
    params: CoverageParams,
    holdout_fraction: f64,
    smoothing: &SmoothingConfig,
    prior: &dyn RootPrior,
    seed: u64,
) -> Result<CoverageReport> {
    let split = make_split(cohorts, holdout_fraction, smoothing.global.h, seed)?;
    let smoothed = smooth_all(&split.train, prior, smoothing);
    let normal = Normal::standard();
    let (z_lo, z_hi) = (normal.inverse_cdf(params.alpha), normal.inverse_cdf(params.beta));
    let mut per_cohort = Vec::with_capacity(split.test.len());
    for (key, held) in &split.test {
        let mut train = split.train[key].clone();
        train.sort_by(f64::total_cmp);
        let empirical = Coverage::of(
            held,
            empirical_quantile(&train, params.alpha)?,
            empirical_quantile(&train, params.beta)?,
        );
        let s = &smoothed[key];
        let sd = s.stats.sigma2.sqrt();
        let smoothed = if s.is_smoothed() {
            Coverage::of(held, (s.stats.mu + z_lo * sd).exp(), (s.stats.mu + z_hi * sd).exp())
        } else {
            empirical
        };
        per_cohort.push(CohortCoverage {
            key: key.clone(),
            n: cohorts[key].len(),
            smoothed,
            empirical,
        });
    }
    Ok(CoverageReport { params, per_cohort })
}
