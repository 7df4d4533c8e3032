//! Three successive outlier stages: fixed sanity limits, limits from external
//! wage data, and per-cohort box-and-whisker pruning.

mod box_whisker;
mod external;
mod report;
mod sanity;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use box_whisker::{stage3_box_whisker, whisker_limits};
pub use external::{
    id_map, map_external_limits, read_id_map, read_title_region_limits, read_wage_rows, stage2_external,
    write_title_region_limits, ExternalLimitRow, ExternalMappingReport, IdMap, TitleRegionLimits,
};
pub use report::{DroppedType, OutlierReport, StageReport};
pub use sanity::{stage1_sanity, SanityLimitRow, SanityLimits};

use crate::cohort::{materialize_cohorts, Cohort, CohortKey, RawSubmission, RecordDiagnostic};

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub lower: f64,
    pub upper: f64,
}

impl Limits {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

/// Box-and-whisker factors and the fractions beyond which a whole type or
/// cohort is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WhiskerParams {
    pub lower_factor: f64,
    pub upper_factor: f64,
    pub max_type_outlier_fraction: f64,
    pub max_cohort_outlier_fraction: f64,
}

impl Default for WhiskerParams {
    fn default() -> Self {
        // Asymmetric whiskers for right-skewed pay.
        WhiskerParams {
            lower_factor: 1.5,
            upper_factor: 2.0,
            max_type_outlier_fraction: 0.3,
            max_cohort_outlier_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutlierConfig {
    pub sanity: SanityLimits,
    /// Stage 2 is skipped when no external limits are available.
    pub external: Option<TitleRegionLimits>,
    pub whiskers: WhiskerParams,
    pub k_min: usize,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig {
            sanity: SanityLimits::us_default(),
            external: None,
            whiskers: WhiskerParams::default(),
            k_min: crate::cohort::DEFAULT_K_MIN,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CleanCohorts {
    pub cohorts: BTreeMap<CohortKey, Cohort>,
    pub report: OutlierReport,
    pub rejected: Vec<RecordDiagnostic>,
}

/// sanity -> external -> materialize -> box-and-whisker per cohort.
pub fn run_outlier_pipeline(submissions: Vec<RawSubmission>, config: &OutlierConfig) -> CleanCohorts {
    let mut report = OutlierReport::default();

    let (subs, r1) = stage1_sanity(submissions, &config.sanity);
    report.stages.push(r1);

    let subs = match &config.external {
        Some(limits) => {
            let (subs, r2) = stage2_external(subs, limits);
            report.stages.push(r2);
            subs
        }
        None => subs,
    };

    let mut mat_report = StageReport::new("materialize");
    mat_report.entries_in = subs.len();
    let materialized = materialize_cohorts(&subs, config.k_min);
    mat_report.entries_quarantined = materialized.rejected.len();
    mat_report.diagnostics = materialized.rejected.clone();
    report.stages.push(mat_report);

    let results: Vec<(Option<Cohort>, StageReport)> = materialized
        .cohorts
        .par_iter()
        .map(|(_, c)| stage3_box_whisker(c, &config.whiskers, config.k_min))
        .collect();
    let mut r3 = StageReport::new("box_whisker");
    let mut cohorts = BTreeMap::new();
    for (cohort, r) in results {
        r3 = r3.merge(r);
        if let Some(c) = cohort {
            cohorts.insert(c.key.clone(), c);
        }
    }
    report.stages.push(r3);

    CleanCohorts {
        cohorts,
        report,
        rejected: materialized.rejected,
    }
}
