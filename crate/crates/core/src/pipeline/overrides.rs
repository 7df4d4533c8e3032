use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortKey, CompensationType, Insight, USER_SUBMISSIONS};
use crate::error::{Error, Result};

/// Insights keyed by cohort, then by type.
pub type StoreDraft = BTreeMap<CohortKey, BTreeMap<CompensationType, Insight>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deletion {
    pub key: CohortKey,
    #[serde(rename = "type")]
    pub comp_type: CompensationType,
}

/// Manual corrections: deletions, then trusted additions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSet {
    #[serde(default)]
    pub deletions: Vec<Deletion>,
    #[serde(default)]
    pub additions: Vec<Insight>,
}

impl OverrideSet {
    pub fn validate(&self) -> Result<()> {
        for a in &self.additions {
            if a.source == USER_SUBMISSIONS {
                return Err(Error::InvalidParameter(format!(
                    "addition for {} {} must name a source other than {USER_SUBMISSIONS}",
                    a.key, a.comp_type
                )));
            }
            a.validate().map_err(Error::InvalidParameter)?;
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let set: OverrideSet =
            serde_json::from_str(&text).map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        set.validate()
            .map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        Ok(set)
    }
}

/// Applies deletions, then additions. Additions replace any insight with the
/// same key and type. Returns warnings for deletions that matched nothing.
pub fn apply_overrides(draft: &mut StoreDraft, overrides: &OverrideSet) -> Vec<String> {
    let mut warnings = Vec::new();
    for d in &overrides.deletions {
        let removed = match draft.get_mut(&d.key) {
            Some(types) => {
                let hit = types.remove(&d.comp_type).is_some();
                if types.is_empty() {
                    draft.remove(&d.key);
                }
                hit
            }
            None => false,
        };
        if !removed {
            warnings.push(format!("deletion of {} {} matched no insight", d.key, d.comp_type));
        }
    }
    for a in &overrides.additions {
        draft.entry(a.key.clone()).or_default().insert(a.comp_type, a.clone());
    }
    warnings
}
