use serde::{Deserialize, Serialize};

use super::InsightStore;
use crate::cohort::{CohortKey, CompensationType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffThresholds {
    /// Maximum relative change in the number of stored cohorts.
    pub max_count_change: f64,
    /// Maximum relative change of any median.
    pub max_median_change: f64,
}

impl Default for DiffThresholds {
    fn default() -> Self {
        DiffThresholds {
            max_count_change: 0.10,
            max_median_change: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianChange {
    pub key: CohortKey,
    #[serde(rename = "type")]
    pub comp_type: CompensationType,
    pub old: f64,
    pub new: f64,
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub old_cohorts: usize,
    pub new_cohorts: usize,
    pub cohort_delta: i64,
    pub added_cohorts: usize,
    pub removed_cohorts: usize,
    /// Changed medians of insights present in both stores.
    pub median_changes: Vec<MedianChange>,
    pub flags: Vec<String>,
}

impl DiffReport {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Compares a new store against the previous one. An empty old store is the
/// bootstrap case and never raises flags.
pub fn diff_stores(new: &InsightStore, old: &InsightStore, thresholds: &DiffThresholds) -> DiffReport {
    let mut flags = Vec::new();
    let (n_old, n_new) = (old.len(), new.len());
    if n_old > 0 {
        let rel = (n_new as f64 - n_old as f64).abs() / n_old as f64;
        if rel > thresholds.max_count_change {
            flags.push(format!(
                "cohort count changed by {:.1}% ({n_old} -> {n_new})",
                rel * 100.0
            ));
        }
    }
    let mut median_changes = Vec::new();
    for (key, insights) in &new.insights {
        for ins in insights {
            let Some(prev) = old.get_type(key, ins.comp_type) else {
                continue;
            };
            if prev.median == ins.median {
                continue;
            }
            let relative_change = (ins.median - prev.median) / prev.median;
            if relative_change.abs() > thresholds.max_median_change {
                flags.push(format!(
                    "median of {key} {} moved {:+.1}%",
                    ins.comp_type,
                    relative_change * 100.0
                ));
            }
            median_changes.push(MedianChange {
                key: key.clone(),
                comp_type: ins.comp_type,
                old: prev.median,
                new: ins.median,
                relative_change,
            });
        }
    }
    DiffReport {
        old_cohorts: n_old,
        new_cohorts: n_new,
        cohort_delta: n_new as i64 - n_old as i64,
        added_cohorts: new.insights.keys().filter(|k| !old.insights.contains_key(k)).count(),
        removed_cohorts: old.insights.keys().filter(|k| !new.insights.contains_key(k)).count(),
        median_changes,
        flags,
    }
}
