use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cohort::{build_histogram, Cohort, CohortKey, CompensationType, Insight, Percentiles, USER_SUBMISSIONS};

/// Output of aggregation for every compensation type.
#[derive(Debug, Clone, Default)]
pub struct Aggregated {
    /// Insights for `(cohort, type)` pairs with `n >= h`.
    pub empirical: BTreeMap<(CohortKey, CompensationType), Insight>,
    /// Values of every `(cohort, type)` pair with `n >= k_min`, per type.
    /// The pairs with `n < h` are the ones routed to smoothing.
    pub values: BTreeMap<CompensationType, BTreeMap<CohortKey, Vec<f64>>>,
}

impl Aggregated {
    pub fn pending_smoothing(&self, h: usize) -> usize {
        self.values
            .values()
            .flat_map(|m| m.values())
            .filter(|v| v.len() < h)
            .count()
    }
}

/// Empirical insight with histogram.
pub fn empirical_insight(key: &CohortKey, comp_type: CompensationType, values: &[f64], buckets: usize) -> Insight {
    let p = Percentiles::empirical(values).expect("non-empty");
    Insight {
        key: key.clone(),
        comp_type,
        p10: p.p10,
        median: p.median,
        p90: p.p90,
        count: values.len(),
        histogram: Some(build_histogram(values, p.p10, p.p90, buckets)),
        smoothed: false,
        source: USER_SUBMISSIONS.to_string(),
        warning: None,
    }
}

/// Per `(cohort, type)`: empirical quantiles and histogram when `n >= h`,
/// otherwise routed to smoothing when `n >= k_min`. Total is derived per
/// entry before aggregating.
pub fn aggregate(cohorts: &BTreeMap<CohortKey, Cohort>, h: usize, k_min: usize, buckets: usize) -> Aggregated {
    let per_cohort: Vec<Vec<(CompensationType, &CohortKey, Vec<f64>, Option<Insight>)>> = cohorts
        .par_iter()
        .map(|(key, cohort)| {
            CompensationType::ALL
                .iter()
                .filter_map(|&ty| {
                    let values = cohort.values(ty);
                    if values.len() < k_min.max(1) {
                        return None;
                    }
                    let insight = (values.len() >= h).then(|| empirical_insight(key, ty, &values, buckets));
                    Some((ty, key, values, insight))
                })
                .collect()
        })
        .collect();
    let mut out = Aggregated::default();
    for (ty, key, values, insight) in per_cohort.into_iter().flatten() {
        if let Some(i) = insight {
            out.empirical.insert((key.clone(), ty), i);
        }
        out.values.entry(ty).or_default().insert(key.clone(), values);
    }
    out
}
