//! Limits derived from an external wage survey mapped onto titles and regions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Limits, StageReport, WhiskerParams};
use crate::cohort::RawSubmission;
use crate::error::{Error, Result};

/// One occupation/region row of published wage percentiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalLimitRow {
    pub occ_id: String,
    pub ext_region_id: String,
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

impl ExternalLimitRow {
    fn is_monotone(&self) -> bool {
        self.p10 <= self.p25 && self.p25 <= self.p50 && self.p50 <= self.p75 && self.p75 <= self.p90
    }

    /// Box-and-whisker limits using the published quartiles directly,
    /// with the lower bound floored at zero.
    pub fn limits(&self, whiskers: &WhiskerParams) -> Limits {
        let iqr = self.p75 - self.p25;
        Limits {
            lower: (self.p25 - whiskers.lower_factor * iqr).max(0.0),
            upper: self.p75 + whiskers.upper_factor * iqr,
        }
    }
}

/// One lower and one upper base-salary bound per (title, region).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TitleRegionLimits {
    pub limits: BTreeMap<(String, String), Limits>,
}

impl TitleRegionLimits {
    pub fn get(&self, title: &str, region: &str) -> Option<Limits> {
        self.limits.get(&(title.to_string(), region.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.limits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.limits.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalMappingReport {
    /// Rows with p25 == p75; their limits collapse and are not aggregated.
    pub degenerate_rows: Vec<(String, String)>,
    /// Rows whose percentiles decrease somewhere.
    pub invalid_rows: Vec<(String, String)>,
    /// Rows whose occupation or region has no mapping.
    pub unmapped_rows: Vec<(String, String)>,
}

/// Many-to-many mapping from external ids to internal ids.
pub type IdMap = BTreeMap<String, BTreeSet<String>>;

pub fn id_map<I, A, B>(pairs: I) -> IdMap
where
    I: IntoIterator<Item = (A, B)>,
    A: Into<String>,
    B: Into<String>,
{
    let mut map = IdMap::new();
    for (a, b) in pairs {
        map.entry(a.into()).or_default().insert(b.into());
    }
    map
}

/// For every (title, region) reachable through the mappings, aggregates the
/// per-row limits of all contributing rows as (min lower, max upper).
pub fn map_external_limits(
    rows: &[ExternalLimitRow],
    occupation_titles: &IdMap,
    region_map: &IdMap,
    whiskers: &WhiskerParams,
) -> (TitleRegionLimits, ExternalMappingReport) {
    let mut out = TitleRegionLimits::default();
    let mut report = ExternalMappingReport::default();
    for row in rows {
        let id = (row.occ_id.clone(), row.ext_region_id.clone());
        if !row.is_monotone() {
            report.invalid_rows.push(id);
            continue;
        }
        if row.p25 == row.p75 {
            report.degenerate_rows.push(id);
            continue;
        }
        let (Some(titles), Some(regions)) = (occupation_titles.get(&row.occ_id), region_map.get(&row.ext_region_id))
        else {
            report.unmapped_rows.push(id);
            continue;
        };
        let row_limits = row.limits(whiskers);
        for title in titles {
            for region in regions {
                out.limits
                    .entry((title.clone(), region.clone()))
                    .and_modify(|l| {
                        l.lower = l.lower.min(row_limits.lower);
                        l.upper = l.upper.max(row_limits.upper);
                    })
                    .or_insert(row_limits);
            }
        }
    }
    (out, report)
}

/// Stage 2: drop entries whose base salary lies outside their (title, region)
/// limits. Entries without limits pass through.
pub fn stage2_external(
    submissions: Vec<RawSubmission>,
    limits: &TitleRegionLimits,
) -> (Vec<RawSubmission>, StageReport) {
    let mut report = StageReport::new("external");
    report.entries_in = submissions.len();
    let kept: Vec<RawSubmission> = submissions
        .into_iter()
        .filter(|s| {
            let bounds = match (&s.title, &s.region) {
                (Some(t), Some(r)) => limits.get(t, r),
                _ => None,
            };
            bounds.is_none_or(|l| l.contains(s.entry.base_salary()))
        })
        .collect();
    report.entries_dropped = report.entries_in - kept.len();
    (kept, report)
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::input(path.display().to_string(), e.to_string()))
}

/// Reads `occ_id, ext_region_id, p10, p25, p50, p75, p90`.
pub fn read_wage_rows(path: &Path) -> Result<Vec<ExternalLimitRow>> {
    let mut reader = open_csv(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| Error::input(path.display().to_string(), e.to_string())))
        .collect()
}

/// Reads a two-column mapping CSV (with header) into a many-to-many map.
pub fn read_id_map(path: &Path) -> Result<IdMap> {
    let mut reader = open_csv(path)?;
    let mut pairs = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::input(
                path.display().to_string(),
                format!("expected 2 columns, found {}", rec.len()),
            ));
        }
        pairs.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(id_map(pairs))
}

#[derive(Serialize, Deserialize)]
struct LimitCsvRow {
    title_id: String,
    region_id: String,
    lower: f64,
    upper: f64,
}

pub fn write_title_region_limits(path: &Path, limits: &TitleRegionLimits) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for ((title, region), l) in &limits.limits {
        w.serialize(LimitCsvRow {
            title_id: title.clone(),
            region_id: region.clone(),
            lower: l.lower,
            upper: l.upper,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_title_region_limits(path: &Path) -> Result<TitleRegionLimits> {
    let mut reader = open_csv(path)?;
    let mut out = TitleRegionLimits::default();
    for row in reader.deserialize() {
        let row: LimitCsvRow = row?;
        if !(row.lower < row.upper) {
            return Err(Error::input(
                path.display().to_string(),
                format!("{}/{}: lower must be below upper", row.title_id, row.region_id),
            ));
        }
        out.limits.insert(
            (row.title_id, row.region_id),
            Limits {
                lower: row.lower,
                upper: row.upper,
            },
        );
    }
    Ok(out)
}
