use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CohortKey, CompensationEntry, CompensationType, Dimension, RecordDiagnostic};
use crate::error::{Error, Result};

/// A submission carrying the full attribute set of its submitter.
///
/// Root attributes are optional here so that incomplete records can be
/// reported during materialization instead of failing the whole file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSubmission {
    pub title: Option<String>,
    pub country: Option<String>,
    pub region: Option<String>,
    pub refinements: BTreeMap<Dimension, String>,
    pub entry: CompensationEntry,
}

impl RawSubmission {
    pub fn new(key: &CohortKey, entry: CompensationEntry) -> Self {
        RawSubmission {
            title: Some(key.title.clone()),
            country: Some(key.country.clone()),
            region: Some(key.region.clone()),
            refinements: key.refinements.clone(),
            entry,
        }
    }

    /// The most refined key this submission belongs to.
    pub fn full_key(&self) -> Option<CohortKey> {
        let title = self.title.as_deref().filter(|s| !s.is_empty())?;
        let country = self.country.as_deref().filter(|s| !s.is_empty())?;
        let region = self.region.as_deref().filter(|s| !s.is_empty())?;
        Some(CohortKey {
            title: title.to_string(),
            country: country.to_string(),
            region: region.to_string(),
            refinements: self.refinements.clone(),
        })
    }

    pub fn missing_root_attribute(&self) -> Option<&'static str> {
        let blank = |v: &Option<String>| v.as_deref().is_none_or(str::is_empty);
        if blank(&self.title) {
            Some("title")
        } else if blank(&self.country) {
            Some("country")
        } else if blank(&self.region) {
            Some("region")
        } else {
            None
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmissionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    submission_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    company: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    industry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    experience_band: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    company_size: Option<String>,
    amounts: BTreeMap<String, String>,
}

fn parse_amount(raw: &str) -> Result<f64, String> {
    let (int, frac) = raw.split_once('.').unwrap_or((raw, ""));
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if int.is_empty() || !digits(int) || !digits(frac) || (raw.contains('.') && frac.is_empty()) {
        return Err(format!("amount {raw:?} is not a non-negative decimal string"));
    }
    raw.parse::<f64>().map_err(|e| format!("amount {raw:?}: {e}"))
}

fn record_to_submission(rec: SubmissionRecord, line: usize) -> Result<RawSubmission, String> {
    let mut amounts = BTreeMap::new();
    for (name, raw) in &rec.amounts {
        let ty: CompensationType = name.parse()?;
        if ty == CompensationType::Total {
            return Err("total is derived and cannot be submitted".into());
        }
        let v = parse_amount(raw)?;
        // A zero amount for an optional type is the same as not having it.
        if v > 0.0 || ty == CompensationType::BaseSalary {
            amounts.insert(ty, v);
        }
    }
    match amounts.get(&CompensationType::BaseSalary) {
        None => return Err("missing base_salary".into()),
        Some(v) if *v <= 0.0 => return Err("base_salary must be positive".into()),
        _ => {}
    }
    let refinements = [
        (Dimension::Company, rec.company),
        (Dimension::Industry, rec.industry),
        (Dimension::Experience, rec.experience_band),
        (Dimension::Degree, rec.degree),
        (Dimension::CompanySize, rec.company_size),
    ]
    .into_iter()
    .filter_map(|(d, v)| v.filter(|s| !s.is_empty()).map(|v| (d, v)))
    .collect();
    Ok(RawSubmission {
        title: rec.title,
        country: rec.country,
        region: rec.region,
        refinements,
        entry: CompensationEntry {
            submission_id: rec.submission_id.unwrap_or_else(|| format!("line-{line}")),
            amounts,
        },
    })
}

/// Parses newline-delimited submission records. Malformed lines are reported,
/// not fatal. Line numbers are 1-based.
pub fn parse_submissions<R: BufRead>(reader: R) -> Result<(Vec<RawSubmission>, Vec<RecordDiagnostic>)> {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<SubmissionRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|rec| record_to_submission(rec, line_no));
        match parsed {
            Ok(s) => ok.push(s),
            Err(message) => bad.push(RecordDiagnostic {
                record: format!("line {line_no}"),
                message,
            }),
        }
    }
    Ok((ok, bad))
}

pub fn read_submissions(path: &Path) -> Result<(Vec<RawSubmission>, Vec<RecordDiagnostic>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
    parse_submissions(std::io::BufReader::new(file))
}

/// Writes submissions in the same line format `parse_submissions` reads,
/// with amounts rendered to cents.
pub fn write_submissions<W: Write>(mut out: W, submissions: &[RawSubmission]) -> Result<()> {
    for s in submissions {
        let get = |d: Dimension| s.refinements.get(&d).cloned();
        let rec = SubmissionRecord {
            submission_id: Some(s.entry.submission_id.clone()),
            title: s.title.clone(),
            country: s.country.clone(),
            region: s.region.clone(),
            company: get(Dimension::Company),
            industry: get(Dimension::Industry),
            experience_band: get(Dimension::Experience),
            degree: get(Dimension::Degree),
            company_size: get(Dimension::CompanySize),
            amounts: s
                .entry
                .amounts
                .iter()
                .map(|(t, v)| (t.as_str().to_string(), format!("{v:.2}")))
                .collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
