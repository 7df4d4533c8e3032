use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    logs, posterior, select_best_ancestor, smoothed_percentiles, LogStats, PosteriorSummary, Provenance,
    SmoothingConfig,
};
use crate::cohort::{CohortKey, Percentiles};

/// Source of priors for cohorts with no usable ancestor.
pub trait RootPrior: Sync {
    /// Prior statistics for a root key, if a model covers it.
    fn root_prior(&self, root: &CohortKey) -> Option<LogStats>;
}

pub struct NoRootPrior;

impl RootPrior for NoRootPrior {
    fn root_prior(&self, _root: &CohortKey) -> Option<LogStats> {
        None
    }
}

impl<F> RootPrior for F
where
    F: Fn(&CohortKey) -> Option<LogStats> + Sync,
{
    fn root_prior(&self, root: &CohortKey) -> Option<LogStats> {
        self(root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SmoothingOutcome {
    /// `n >= h`: empirical statistics and quantiles.
    Empirical,
    /// Posterior against an ancestor, or against the regression prior when
    /// `ancestor` is `None`.
    Smoothed {
        ancestor: Option<CohortKey>,
        posterior: PosteriorSummary,
    },
    /// Small cohort with neither an ancestor nor a prior.
    Unsmoothed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCohort {
    pub key: CohortKey,
    pub count: usize,
    pub stats: LogStats,
    pub percentiles: Percentiles,
    #[serde(flatten)]
    pub outcome: SmoothingOutcome,
}

impl SmoothedCohort {
    pub fn is_smoothed(&self) -> bool {
        matches!(self.outcome, SmoothingOutcome::Smoothed { .. })
    }
}

fn resolve(
    key: &CohortKey,
    values: &[f64],
    resolved: &BTreeMap<CohortKey, SmoothedCohort>,
    prior: &dyn RootPrior,
    config: &SmoothingConfig,
) -> SmoothedCohort {
    let params = config.params_for(key);
    let y = logs(values);
    let n = values.len();
    let empirical_stats = LogStats::from_logs(&y).expect("non-empty");
    let empirical = || Percentiles::empirical(values).expect("non-empty");

    if n >= params.h {
        return SmoothedCohort {
            key: key.clone(),
            count: n,
            stats: empirical_stats,
            percentiles: empirical(),
            outcome: SmoothingOutcome::Empirical,
        };
    }

    let candidates: Vec<(CohortKey, LogStats)> = key
        .ancestors()
        .into_iter()
        .filter_map(|a| resolved.get(&a).map(|r| (a, r.stats)))
        .collect();
    let chosen = match select_best_ancestor(&y, &candidates) {
        Ok((a, stats)) => Some((Some(a), stats)),
        Err(_) => prior.root_prior(&key.to_root()).map(|p| {
            // A model prior weighs as much as an ancestor with h samples.
            let stats = LogStats {
                m: params.h,
                provenance: Provenance::RegressionPrior,
                sigma2: p.sigma2.max(super::MIN_LOG_VARIANCE),
                ..p
            };
            (None, stats)
        }),
    };

    match chosen {
        Some((ancestor, stats)) => {
            let post: PosteriorSummary = posterior(&y, &stats, &params).expect("n >= 1 and sigma2 > 0");
            SmoothedCohort {
                key: key.clone(),
                count: n,
                stats: LogStats {
                    mu: post.mu_hat,
                    sigma2: post.sigma2_hat,
                    m: n,
                    provenance: Provenance::Smoothed,
                },
                percentiles: smoothed_percentiles(&post),
                outcome: SmoothingOutcome::Smoothed {
                    ancestor,
                    posterior: post,
                },
            }
        }
        None => SmoothedCohort {
            key: key.clone(),
            count: n,
            stats: empirical_stats,
            percentiles: empirical(),
            outcome: SmoothingOutcome::Unsmoothed {
                reason: "no ancestor and no regression prior".into(),
            },
        },
    }
}

/// Resolves every key, roots first. Keys at the same refinement level only
/// depend on already-resolved coarser keys and are processed in parallel.
///
/// `values` holds positive raw amounts for one compensation type; empty
/// entries are ignored.
pub fn smooth_all(
    values: &BTreeMap<CohortKey, Vec<f64>>,
    prior: &dyn RootPrior,
    config: &SmoothingConfig,
) -> BTreeMap<CohortKey, SmoothedCohort> {
    let mut by_level: BTreeMap<usize, Vec<(&CohortKey, &Vec<f64>)>> = BTreeMap::new();
    for (k, v) in values {
        if !v.is_empty() {
            by_level.entry(k.level()).or_default().push((k, v));
        }
    }
    let mut resolved = BTreeMap::new();
    for (_, level) in by_level {
        let done: Vec<SmoothedCohort> = level
            .par_iter()
            .map(|(k, v)| resolve(k, v, &resolved, prior, config))
            .collect();
        for r in done {
            resolved.insert(r.key.clone(), r);
        }
    }
    resolved
}
