use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Limits, StageReport};
use crate::cohort::{CompensationType, RawSubmission, RecordDiagnostic};
use crate::error::{Error, Result};

/// One configured sanity bound, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanityLimitRow {
    pub country: String,
    #[serde(rename = "type")]
    pub comp_type: CompensationType,
    pub lower: f64,
    pub upper: f64,
}

/// Fixed per-(country, compensation type) bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SanityLimits {
    limits: BTreeMap<(String, CompensationType), Limits>,
}

impl SanityLimits {
    pub fn from_rows(rows: &[SanityLimitRow]) -> Result<Self> {
        let mut limits = BTreeMap::new();
        for r in rows {
            if !(r.lower >= 0.0 && r.lower < r.upper) {
                return Err(Error::InvalidParameter(format!(
                    "sanity limit {}/{}: need 0 <= lower < upper, got [{}, {}]",
                    r.country, r.comp_type, r.lower, r.upper
                )));
            }
            let prev = limits.insert(
                (r.country.clone(), r.comp_type),
                Limits {
                    lower: r.lower,
                    upper: r.upper,
                },
            );
            if prev.is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate sanity limit for {}/{}",
                    r.country, r.comp_type
                )));
            }
        }
        Ok(SanityLimits { limits })
    }

    /// US defaults: federal minimum wage to $2M for base salary.
    pub fn us_default() -> Self {
        Self::from_rows(&[SanityLimitRow {
            country: "US".into(),
            comp_type: CompensationType::BaseSalary,
            lower: 15080.0,
            upper: 2_000_000.0,
        }])
        .expect("valid defaults")
    }

    pub fn get(&self, country: &str, ty: CompensationType) -> Option<Limits> {
        self.limits.get(&(country.to_string(), ty)).copied()
    }

    pub fn rows(&self) -> Vec<SanityLimitRow> {
        self.limits
            .iter()
            .map(|((country, ty), l)| SanityLimitRow {
                country: country.clone(),
                comp_type: *ty,
                lower: l.lower,
                upper: l.upper,
            })
            .collect()
    }
}

/// Stage 1: drop entries whose base salary falls outside the inclusive
/// country bounds and clip other types to their configured upper bound.
/// Entries from countries without a base-salary bound are quarantined.
pub fn stage1_sanity(submissions: Vec<RawSubmission>, limits: &SanityLimits) -> (Vec<RawSubmission>, StageReport) {
    let mut report = StageReport::new("sanity");
    report.entries_in = submissions.len();
    let mut kept = Vec::with_capacity(submissions.len());
    for mut s in submissions {
        let country = s.country.clone().unwrap_or_default();
        let Some(base) = limits.get(&country, CompensationType::BaseSalary) else {
            report.entries_quarantined += 1;
            report.diagnostics.push(RecordDiagnostic {
                record: s.entry.submission_id.clone(),
                message: format!("no sanity limits for country {country:?}"),
            });
            continue;
        };
        if !base.contains(s.entry.base_salary()) {
            report.entries_dropped += 1;
            continue;
        }
        for (ty, amount) in s.entry.amounts.iter_mut() {
            if *ty == CompensationType::BaseSalary {
                continue;
            }
            if let Some(l) = limits.get(&country, *ty) {
                if *amount > l.upper {
                    *amount = l.upper;
                    report.values_clipped += 1;
                }
            }
        }
        kept.push(s);
    }
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{CohortKey, CompensationEntry};

    fn us(entry: CompensationEntry) -> RawSubmission {
        RawSubmission::new(&CohortKey::root("t", "US", "r"), entry)
    }

    fn limits_with_bonus_cap() -> SanityLimits {
        let mut rows = SanityLimits::us_default().rows();
        rows.push(SanityLimitRow {
            country: "US".into(),
            comp_type: CompensationType::AnnualBonus,
            lower: 0.0,
            upper: 1e7,
        });
        SanityLimits::from_rows(&rows).unwrap()
    }

    #[test]
    fn minimum_wage_is_inclusive() {
        let (kept, report) = stage1_sanity(
            vec![us(CompensationEntry::new("a", 15080.0))],
            &SanityLimits::us_default(),
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(report.entries_dropped, 0);
    }

    #[test]
    fn above_upper_bound_is_removed() {
        let (kept, report) = stage1_sanity(
            vec![us(CompensationEntry::new("a", 2_000_001.0))],
            &SanityLimits::us_default(),
        );
        assert!(kept.is_empty());
        assert_eq!(report.entries_dropped, 1);
        assert_eq!(report.entries_out(), 0);
    }

    #[test]
    fn non_base_values_are_clipped() {
        let entry = CompensationEntry::new("a", 100_000.0).with(CompensationType::AnnualBonus, 1e9);
        let (kept, report) = stage1_sanity(vec![us(entry)], &limits_with_bonus_cap());
        assert_eq!(kept[0].entry.amount(CompensationType::AnnualBonus), Some(1e7));
        assert_eq!(report.values_clipped, 1);
    }

    #[test]
    fn unknown_country_is_quarantined() {
        let s = RawSubmission::new(
            &CohortKey::root("t", "FR", "r"),
            CompensationEntry::new("fr1", 50_000.0),
        );
        let (kept, report) = stage1_sanity(vec![s], &SanityLimits::us_default());
        assert!(kept.is_empty());
        assert_eq!(report.entries_quarantined, 1);
        assert_eq!(report.diagnostics[0].record, "fr1");
    }

    #[test]
    fn rejects_inverted_limits() {
        let rows = [SanityLimitRow {
            country: "US".into(),
            comp_type: CompensationType::BaseSalary,
            lower: 10.0,
            upper: 5.0,
        }];
        assert!(SanityLimits::from_rows(&rows).is_err());
    }
}
