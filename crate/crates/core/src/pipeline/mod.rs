//! Offline flow: outliers, aggregation, smoothing, manual overrides, lists,
//! and the insight store, plus a sanity diff against the previous store.

mod aggregate;
mod diff;
mod lists;
mod overrides;
mod store;

use std::collections::BTreeMap;

use serde::Serialize;

pub use aggregate::{aggregate, empirical_insight, Aggregated};
pub use diff::{diff_stores, DiffReport, DiffThresholds, MedianChange};
pub use lists::{make_lists, Lists, RelatedMaps, RELATED_LIST_LEN, TOP_LIST_LEN};
pub use overrides::{apply_overrides, Deletion, OverrideSet, StoreDraft};
pub use store::{InsightStore, FORMAT_VERSION};

use crate::cohort::{CohortKey, CompensationType, Insight, RawSubmission, USER_SUBMISSIONS};
use crate::outliers::{run_outlier_pipeline, OutlierConfig, OutlierReport};
use crate::regression::{RegressionPriors, RidgeConfig};
use crate::smoothing::{smooth_all, SmoothedCohort, SmoothingConfig, SmoothingOutcome};

pub const DEFAULT_HISTOGRAM_BUCKETS: usize = 10;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub outliers: OutlierConfig,
    pub smoothing: SmoothingConfig,
    pub ridge: RidgeConfig,
    pub histogram_buckets: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            outliers: OutlierConfig::default(),
            smoothing: SmoothingConfig::default(),
            ridge: RidgeConfig::default(),
            histogram_buckets: DEFAULT_HISTOGRAM_BUCKETS,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn h(&self) -> usize {
        self.smoothing.global.h
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildSummary {
    pub submissions: usize,
    pub cohorts_after_outliers: usize,
    pub empirical_insights: usize,
    pub smoothed_insights: usize,
    pub unsmoothed_insights: usize,
    pub override_deletions: usize,
    pub override_additions: usize,
    pub stored_cohorts: usize,
    pub build_id: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub store: InsightStore,
    pub outliers: OutlierReport,
    pub priors: RegressionPriors,
    pub summary: BuildSummary,
}

/// Root-cohort values per (root, type), the training data for the priors.
pub fn root_training_values(agg: &Aggregated) -> BTreeMap<(CohortKey, CompensationType), Vec<f64>> {
    agg.values
        .iter()
        .flat_map(|(ty, cohorts)| {
            cohorts
                .iter()
                .filter(|(k, _)| k.is_root())
                .map(move |(k, v)| ((k.clone(), *ty), v.clone()))
        })
        .collect()
}

/// Smooths every type and turns the results into insights. Cohorts with
/// `n >= h` reuse the empirical insight from aggregation.
pub fn smooth_insights(
    agg: &Aggregated,
    priors: &RegressionPriors,
    smoothing: &SmoothingConfig,
    buckets: usize,
) -> (
    StoreDraft,
    BTreeMap<CompensationType, BTreeMap<CohortKey, SmoothedCohort>>,
    Vec<String>,
) {
    let mut draft = StoreDraft::new();
    let mut warnings = Vec::new();
    let mut all = BTreeMap::new();
    for (ty, values) in &agg.values {
        let smoothed = smooth_all(values, &priors.for_type(*ty), smoothing);
        for (key, s) in &smoothed {
            let insight = match &s.outcome {
                SmoothingOutcome::Empirical => agg.empirical[&(key.clone(), *ty)].clone(),
                SmoothingOutcome::Smoothed { .. } => Insight {
                    key: key.clone(),
                    comp_type: *ty,
                    p10: s.percentiles.p10,
                    median: s.percentiles.median,
                    p90: s.percentiles.p90,
                    count: s.count,
                    histogram: None,
                    smoothed: true,
                    source: USER_SUBMISSIONS.to_string(),
                    warning: None,
                },
                SmoothingOutcome::Unsmoothed { reason } => {
                    let w = format!(
                        "{key} {ty}: {reason}; serving empirical quantiles of {} values",
                        s.count
                    );
                    warnings.push(w.clone());
                    Insight {
                        warning: Some(w),
                        ..empirical_insight(key, *ty, &values[key], buckets)
                    }
                }
            };
            draft.entry(key.clone()).or_default().insert(*ty, insight);
        }
        all.insert(*ty, smoothed);
    }
    (draft, all, warnings)
}

/// The full build: outliers, aggregate, train priors, smooth, overrides,
/// lists, store.
pub fn build(
    submissions: Vec<RawSubmission>,
    overrides: &OverrideSet,
    related: Option<&RelatedMaps>,
    config: &PipelineConfig,
) -> BuildOutput {
    let mut summary = BuildSummary {
        submissions: submissions.len(),
        ..BuildSummary::default()
    };
    let clean = run_outlier_pipeline(submissions, &config.outliers);
    summary.cohorts_after_outliers = clean.cohorts.len();

    let agg = aggregate(
        &clean.cohorts,
        config.h(),
        config.outliers.k_min,
        config.histogram_buckets,
    );
    let (priors, prior_warnings) =
        RegressionPriors::train(&root_training_values(&agg), &config.ridge, config.h(), config.seed);
    summary.warnings.extend(prior_warnings);

    let (mut draft, smoothed, warnings) = smooth_insights(&agg, &priors, &config.smoothing, config.histogram_buckets);
    summary.warnings.extend(warnings);
    for s in smoothed.values().flat_map(|m| m.values()) {
        match s.outcome {
            SmoothingOutcome::Empirical => summary.empirical_insights += 1,
            SmoothingOutcome::Smoothed { .. } => summary.smoothed_insights += 1,
            SmoothingOutcome::Unsmoothed { .. } => summary.unsmoothed_insights += 1,
        }
    }

    summary.warnings.extend(apply_overrides(&mut draft, overrides));
    summary.override_deletions = overrides.deletions.len();
    summary.override_additions = overrides.additions.len();

    let lists = make_lists(&draft, related);
    let store = InsightStore::new(draft, lists);
    summary.stored_cohorts = store.len();
    summary.build_id = store.build_id.clone();
    BuildOutput {
        store,
        outliers: clean.report,
        priors,
        summary,
    }
}
