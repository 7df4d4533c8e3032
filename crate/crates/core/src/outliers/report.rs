use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortKey, CompensationType, RecordDiagnostic};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedType {
    pub key: CohortKey,
    #[serde(rename = "type")]
    pub comp_type: CompensationType,
}

/// What one stage did. Merging two reports of the same stage is associative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub entries_in: usize,
    pub entries_dropped: usize,
    pub entries_quarantined: usize,
    pub values_clipped: usize,
    pub types_dropped: Vec<DroppedType>,
    pub cohorts_dropped: Vec<CohortKey>,
    /// Base-salary outlier fraction per cohort (stage 3 only).
    pub cohort_outlier_fractions: BTreeMap<CohortKey, f64>,
    pub diagnostics: Vec<RecordDiagnostic>,
}

impl StageReport {
    pub fn new(stage: &str) -> Self {
        StageReport {
            stage: stage.to_string(),
            ..Default::default()
        }
    }

    pub fn entries_out(&self) -> usize {
        self.entries_in - self.entries_dropped - self.entries_quarantined
    }

    pub fn merge(mut self, other: StageReport) -> StageReport {
        if self.stage.is_empty() {
            self.stage = other.stage;
        }
        self.entries_in += other.entries_in;
        self.entries_dropped += other.entries_dropped;
        self.entries_quarantined += other.entries_quarantined;
        self.values_clipped += other.values_clipped;
        self.types_dropped.extend(other.types_dropped);
        self.cohorts_dropped.extend(other.cohorts_dropped);
        self.cohort_outlier_fractions.extend(other.cohort_outlier_fractions);
        self.diagnostics.extend(other.diagnostics);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub stages: Vec<StageReport>,
}

impl OutlierReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }
}
