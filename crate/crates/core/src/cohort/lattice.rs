use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Cohort, CohortKey, RawSubmission};

/// A per-record problem found while ingesting or materializing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDiagnostic {
    pub record: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Materialized {
    pub cohorts: BTreeMap<CohortKey, Cohort>,
    pub rejected: Vec<RecordDiagnostic>,
}

/// Adds every submission to each lattice key it matches (its full key and
/// all proper generalizations), then drops keys with fewer than `k_min`
/// entries.
pub fn materialize_cohorts(submissions: &[RawSubmission], k_min: usize) -> Materialized {
    let mut cohorts: BTreeMap<CohortKey, Cohort> = BTreeMap::new();
    let mut rejected = Vec::new();
    for s in submissions {
        let Some(full) = s.full_key() else {
            let missing = s.missing_root_attribute().unwrap_or("root attribute");
            rejected.push(RecordDiagnostic {
                record: s.entry.submission_id.clone(),
                message: format!("missing {missing}"),
            });
            continue;
        };
        let mut keys = full.ancestors();
        keys.push(full);
        for key in keys {
            cohorts
                .entry(key.clone())
                .or_insert_with(|| Cohort {
                    key,
                    entries: Vec::new(),
                })
                .entries
                .push(s.entry.clone());
        }
    }
    cohorts.retain(|_, c| c.len() >= k_min);
    Materialized { cohorts, rejected }
}
