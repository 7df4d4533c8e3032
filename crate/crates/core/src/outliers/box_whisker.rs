use std::collections::BTreeMap;

use super::{DroppedType, Limits, StageReport, WhiskerParams};
use crate::cohort::{empirical_quantile, Cohort, CompensationType};
use crate::error::Result;

/// `[Q1 - lower_factor * IQR, Q3 + upper_factor * IQR]` of unsorted values.
pub fn whisker_limits(values: &[f64], whiskers: &WhiskerParams) -> Result<Limits> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = empirical_quantile(&sorted, 0.25)?;
    let q3 = empirical_quantile(&sorted, 0.75)?;
    let iqr = q3 - q1;
    Ok(Limits {
        lower: q1 - whiskers.lower_factor * iqr,
        upper: q3 + whiskers.upper_factor * iqr,
    })
}

/// Stage 3 on one cohort.
///
/// All limits are computed from the input cohort before anything is pruned.
/// Entries with an outlying base salary are removed; other types are clipped
/// into their limits, or dropped from the cohort when their outlier fraction
/// exceeds `max_type_outlier_fraction`. The whole cohort is dropped when the
/// base-salary outlier fraction exceeds `max_cohort_outlier_fraction`, or when
/// pruning leaves fewer than `k_min` entries.
pub fn stage3_box_whisker(cohort: &Cohort, whiskers: &WhiskerParams, k_min: usize) -> (Option<Cohort>, StageReport) {
    let mut report = StageReport::new("box_whisker");
    report.entries_in = cohort.len();

    let base_values = cohort.values(CompensationType::BaseSalary);
    let Ok(base_limits) = whisker_limits(&base_values, whiskers) else {
        report.cohorts_dropped.push(cohort.key.clone());
        report.entries_dropped = cohort.len();
        return (None, report);
    };
    let base_outliers = base_values.iter().filter(|v| !base_limits.contains(**v)).count();
    let base_fraction = base_outliers as f64 / base_values.len() as f64;
    report
        .cohort_outlier_fractions
        .insert(cohort.key.clone(), base_fraction);
    if base_fraction > whiskers.max_cohort_outlier_fraction {
        report.cohorts_dropped.push(cohort.key.clone());
        report.entries_dropped = cohort.len();
        return (None, report);
    }

    let mut type_limits: BTreeMap<CompensationType, Option<Limits>> = BTreeMap::new();
    for ty in CompensationType::SUBMITTED.into_iter().skip(1) {
        let values = cohort.values(ty);
        if values.is_empty() {
            continue;
        }
        let limits = whisker_limits(&values, whiskers).expect("non-empty");
        let outliers = values.iter().filter(|v| !limits.contains(**v)).count();
        let fraction = outliers as f64 / values.len() as f64;
        if fraction > whiskers.max_type_outlier_fraction {
            report.types_dropped.push(DroppedType {
                key: cohort.key.clone(),
                comp_type: ty,
            });
            type_limits.insert(ty, None);
        } else {
            type_limits.insert(ty, Some(limits));
        }
    }

    let mut entries = Vec::with_capacity(cohort.len());
    for entry in &cohort.entries {
        if !base_limits.contains(entry.base_salary()) {
            report.entries_dropped += 1;
            continue;
        }
        let mut entry = entry.clone();
        entry.amounts.retain(|ty, amount| match type_limits.get(ty) {
            Some(None) => false,
            Some(Some(l)) => {
                let clipped = l.clip(*amount);
                if clipped != *amount {
                    report.values_clipped += 1;
                    *amount = clipped;
                }
                true
            }
            None => true,
        });
        entries.push(entry);
    }

    if entries.len() < k_min {
        report.cohorts_dropped.push(cohort.key.clone());
        report.entries_dropped = cohort.len();
        return (None, report);
    }
    (
        Some(Cohort {
            key: cohort.key.clone(),
            entries,
        }),
        report,
    )
}
