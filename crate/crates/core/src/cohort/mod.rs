//! Domain types, the cohort generalization lattice and empirical aggregation.

mod key;
mod lattice;
mod stats;
mod submissions;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use key::CohortKey;
pub use lattice::{materialize_cohorts, Materialized, RecordDiagnostic};
pub use stats::{build_histogram, empirical_quantile, Bucket, Histogram, Percentiles};
pub use submissions::{parse_submissions, read_submissions, write_submissions, RawSubmission};

/// Default privacy threshold: cohorts below this size are never materialized.
pub const DEFAULT_K_MIN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensationType {
    BaseSalary,
    AnnualBonus,
    SignOnBonus,
    Commission,
    Stock,
    Tips,
    Other,
    /// Derived: sum of the present submitted types. Never submitted.
    Total,
}

impl CompensationType {
    pub const SUBMITTED: [CompensationType; 7] = [
        CompensationType::BaseSalary,
        CompensationType::AnnualBonus,
        CompensationType::SignOnBonus,
        CompensationType::Commission,
        CompensationType::Stock,
        CompensationType::Tips,
        CompensationType::Other,
    ];

    pub const ALL: [CompensationType; 8] = [
        CompensationType::BaseSalary,
        CompensationType::AnnualBonus,
        CompensationType::SignOnBonus,
        CompensationType::Commission,
        CompensationType::Stock,
        CompensationType::Tips,
        CompensationType::Other,
        CompensationType::Total,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CompensationType::BaseSalary => "base_salary",
            CompensationType::AnnualBonus => "annual_bonus",
            CompensationType::SignOnBonus => "sign_on_bonus",
            CompensationType::Commission => "commission",
            CompensationType::Stock => "stock",
            CompensationType::Tips => "tips",
            CompensationType::Other => "other",
            CompensationType::Total => "total",
        }
    }
}

impl fmt::Display for CompensationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompensationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CompensationType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown compensation type {s:?}"))
    }
}

/// Refinement attributes that narrow a root cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Company,
    Industry,
    Experience,
    Degree,
    CompanySize,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Company,
        Dimension::Industry,
        Dimension::Experience,
        Dimension::Degree,
        Dimension::CompanySize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Company => "company",
            Dimension::Industry => "industry",
            Dimension::Experience => "experience",
            Dimension::Degree => "degree",
            Dimension::CompanySize => "company_size",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown dimension {s:?}"))
    }
}

/// One de-identified submission. Amounts are annualized, in major currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationEntry {
    pub submission_id: String,
    pub amounts: BTreeMap<CompensationType, f64>,
}

impl CompensationEntry {
    pub fn new(submission_id: impl Into<String>, base_salary: f64) -> Self {
        let mut amounts = BTreeMap::new();
        amounts.insert(CompensationType::BaseSalary, base_salary);
        CompensationEntry {
            submission_id: submission_id.into(),
            amounts,
        }
    }

    pub fn with(mut self, ty: CompensationType, amount: f64) -> Self {
        self.amounts.insert(ty, amount);
        self
    }

    pub fn base_salary(&self) -> f64 {
        self.amounts.get(&CompensationType::BaseSalary).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.amounts
            .iter()
            .filter(|(t, _)| **t != CompensationType::Total)
            .map(|(_, v)| v)
            .sum()
    }

    /// Amount for `ty`, deriving `Total` on the fly. Zero amounts count as absent.
    pub fn amount(&self, ty: CompensationType) -> Option<f64> {
        let v = match ty {
            CompensationType::Total => Some(self.total()),
            _ => self.amounts.get(&ty).copied(),
        };
        v.filter(|v| *v > 0.0)
    }
}

/// A materialized lattice node and its entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub key: CohortKey,
    pub entries: Vec<CompensationEntry>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Positive amounts of `ty` across entries, in entry order.
    pub fn values(&self, ty: CompensationType) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.amount(ty)).collect()
    }
}

/// The served record for one cohort and compensation type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub key: CohortKey,
    #[serde(rename = "type")]
    pub comp_type: CompensationType,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
    pub smoothed: bool,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Source tag for insights computed from user submissions.
pub const USER_SUBMISSIONS: &str = "user-submissions";

impl Insight {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.p10 <= self.median && self.median <= self.p90) {
            return Err(format!(
                "{} {}: quantiles out of order ({} / {} / {})",
                self.key, self.comp_type, self.p10, self.median, self.p90
            ));
        }
        if self.histogram.is_some() == self.smoothed {
            return Err(format!(
                "{} {}: histogram must be present exactly when not smoothed",
                self.key, self.comp_type
            ));
        }
        if let Some(h) = &self.histogram {
            let strictly_increasing = h
                .windows(2)
                .all(|w| w[0].lower < w[1].lower && w[0].upper <= w[1].lower + 1e-9 * w[1].lower.abs());
            if !strictly_increasing {
                return Err(format!(
                    "{} {}: histogram edges not increasing",
                    self.key, self.comp_type
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_sum_of_submitted_types() {
        let e = CompensationEntry::new("a", 100_000.0)
            .with(CompensationType::AnnualBonus, 10_000.0)
            .with(CompensationType::Stock, 5_000.0);
        assert_eq!(e.total(), 115_000.0);
        assert_eq!(e.amount(CompensationType::Total), Some(115_000.0));
        assert_eq!(e.amount(CompensationType::Tips), None);
    }

    #[test]
    fn names_round_trip() {
        for t in CompensationType::ALL {
            assert_eq!(t.as_str().parse::<CompensationType>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.as_str()));
        }
        for d in Dimension::ALL {
            assert_eq!(d.as_str().parse::<Dimension>().unwrap(), d);
            assert_eq!(serde_json::to_string(&d).unwrap(), format!("\"{}\"", d.as_str()));
        }
    }
}
