use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::Percentiles;
use crate::error::{Error, Result};
use crate::outliers::{whisker_limits, WhiskerParams};

pub const MIN_WAGE: f64 = 15_080.0;
pub const TWO_MILLION: f64 = 2_000_000.0;
pub const MIN_STUDY_COHORT: usize = 20;
pub const DEFAULT_FRACTIONS: [f64; 7] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// Spurious entries at the federal minimum wage.
    MinWage,
    /// Spurious entries at 2,000,000.
    TwoMillion,
    /// Spurious entries drawn uniformly between the cohort's p10 and p90.
    UniformInRange,
}

impl PerturbationMode {
    pub const ALL: [PerturbationMode; 3] = [
        PerturbationMode::MinWage,
        PerturbationMode::UniformInRange,
        PerturbationMode::TwoMillion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationMode::MinWage => "min-wage",
            PerturbationMode::TwoMillion => "two-million",
            PerturbationMode::UniformInRange => "uniform-in-range",
        }
    }
}

impl fmt::Display for PerturbationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PerturbationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown perturbation mode {s:?}")))
    }
}

/// One row of the study table; every figure is a mean over cohorts, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub mode: PerturbationMode,
    pub fraction: f64,
    pub cohorts: usize,
    pub added_removed_pct: f64,
    pub original_removed_pct: f64,
    pub p10_change_pct: f64,
    pub median_change_pct: f64,
    pub p90_change_pct: f64,
}

/// Number of spurious entries added to a cohort of size `n`.
pub fn added_count(n: usize, fraction: f64) -> usize {
    if fraction <= 0.0 {
        0
    } else {
        ((fraction * n as f64).round() as usize).max(1)
    }
}

/// Values kept by the box-and-whisker stage.
fn prune(values: &[f64], whiskers: &WhiskerParams) -> Vec<bool> {
    let limits = whisker_limits(values, whiskers).expect("non-empty");
    values.iter().map(|v| limits.contains(*v)).collect()
}

struct Trial {
    added_removed: f64,
    original_removed: f64,
    change: [f64; 3],
}

fn trial(
    valid: &[f64],
    base: &Percentiles,
    mode: PerturbationMode,
    fraction: f64,
    whiskers: &WhiskerParams,
    rng: &mut ChaCha8Rng,
) -> Trial {
    let k = added_count(valid.len(), fraction);
    let added: Vec<f64> = (0..k)
        .map(|_| match mode {
            PerturbationMode::MinWage => MIN_WAGE,
            PerturbationMode::TwoMillion => TWO_MILLION,
            PerturbationMode::UniformInRange if base.p90 > base.p10 => rng.random_range(base.p10..=base.p90),
            PerturbationMode::UniformInRange => base.p10,
        })
        .collect();
    let all: Vec<f64> = valid.iter().chain(&added).copied().collect();
    let keep = prune(&all, whiskers);
    let original_removed = keep[..valid.len()].iter().filter(|k| !**k).count();
    let added_removed = keep[valid.len()..].iter().filter(|k| !**k).count();
    let kept: Vec<f64> = all.iter().zip(&keep).filter(|(_, k)| **k).map(|(v, _)| *v).collect();
    let after = Percentiles::empirical(&kept).expect("original entries inside their own limits remain");
    let pct = |new: f64, old: f64| 100.0 * (new - old) / old;
    Trial {
        added_removed: if k == 0 { 0.0 } else { added_removed as f64 / k as f64 },
        original_removed: original_removed as f64 / valid.len() as f64,
        change: [
            pct(after.p10, base.p10),
            pct(after.median, base.median),
            pct(after.p90, base.p90),
        ],
    }
}

/// Adds spurious base salaries to each cohort, reruns box-and-whisker pruning
/// and records how much was removed and how the quantiles moved.
///
/// Each input cohort is first pruned once on its own, so that the study
/// starts from data that already passed outlier detection. Cohorts with fewer
/// than 20 valid values are skipped.
pub fn perturbation_study(
    cohorts: &[Vec<f64>],
    mode: PerturbationMode,
    fractions: &[f64],
    whiskers: &WhiskerParams,
    seed: u64,
) -> Vec<PerturbationRow> {
    let valid: Vec<(Vec<f64>, Percentiles)> = cohorts
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let keep = prune(c, whiskers);
            c.iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(v, _)| *v)
                .collect::<Vec<f64>>()
        })
        .filter(|v| v.len() >= MIN_STUDY_COHORT)
        .map(|v| {
            let p = Percentiles::empirical(&v).expect("non-empty");
            (v, p)
        })
        .collect();
    fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            let trials: Vec<Trial> = valid
                .par_iter()
                .enumerate()
                .map(|(ci, (v, p))| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((fi as u64) << 32) | ci as u64);
                    trial(v, p, mode, fraction, whiskers, &mut rng)
                })
                .collect();
            let n = trials.len().max(1) as f64;
            let mean = |f: &dyn Fn(&Trial) -> f64| trials.iter().map(f).sum::<f64>() / n;
            PerturbationRow {
                mode,
                fraction,
                cohorts: trials.len(),
                added_removed_pct: 100.0 * mean(&|t| t.added_removed),
                original_removed_pct: 100.0 * mean(&|t| t.original_removed),
                p10_change_pct: mean(&|t| t.change[0]),
                median_change_pct: mean(&|t| t.change[1]),
                p90_change_pct: mean(&|t| t.change[2]),
            }
        })
        .collect()
}

/// CSV: mode, fraction, added-removed %, original-removed %, and the three
/// quantile changes in percent.
pub fn write_perturbation_csv<W: std::io::Write>(writer: W, rows: &[PerturbationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "mode",
        "fraction_pct",
        "added_removed_pct",
        "original_removed_pct",
        "p10_change_pct",
        "median_change_pct",
        "p90_change_pct",
    ])?;
    for r in rows {
        w.write_record([
            r.mode.to_string(),
            format!("{:.0}", r.fraction * 100.0),
            format!("{:.2}", r.added_removed_pct),
            format!("{:.2}", r.original_removed_pct),
            format!("{:.2}", r.p10_change_pct),
            format!("{:.2}", r.median_change_pct),
            format!("{:.2}", r.p90_change_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cohorts() -> Vec<Vec<f64>> {
        (0..30)
            .map(|c| {
                (0..40)
                    .map(|i| 60_000.0 + 1_000.0 * c as f64 + 700.0 * i as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn zero_fraction_changes_nothing() {
        for mode in PerturbationMode::ALL {
            let rows = perturbation_study(&cohorts(), mode, &[0.0], &WhiskerParams::default(), 1);
            let r = rows[0];
            assert_eq!(r.cohorts, 30);
            assert_eq!(
                [
                    r.added_removed_pct,
                    r.original_removed_pct,
                    r.p10_change_pct,
                    r.median_change_pct,
                    r.p90_change_pct
                ],
                [0.0; 5]
            );
        }
    }

    #[test]
    fn added_counts_round_with_floor_of_one() {
        assert_eq!(added_count(20, 0.05), 1);
        assert_eq!(added_count(10, 0.01), 1);
        assert_eq!(added_count(30, 0.35), 11);
        assert_eq!(added_count(30, 0.0), 0);
    }

    #[test]
    fn small_cohorts_are_skipped() {
        let rows = perturbation_study(
            &[vec![1.0; 19]],
            PerturbationMode::TwoMillion,
            &[0.1],
            &WhiskerParams::default(),
            0,
        );
        assert_eq!(rows[0].cohorts, 0);
    }

    #[test]
    fn two_million_at_five_percent_is_removed() {
        let rows = perturbation_study(
            &cohorts(),
            PerturbationMode::TwoMillion,
            &[0.05],
            &WhiskerParams::default(),
            1,
        );
        assert_eq!(rows[0].added_removed_pct, 100.0);
        assert_eq!(rows[0].original_removed_pct, 0.0);
    }

    #[test]
    fn deterministic_and_csv_shape() {
        let a = perturbation_study(
            &cohorts(),
            PerturbationMode::UniformInRange,
            &DEFAULT_FRACTIONS,
            &WhiskerParams::default(),
            3,
        );
        let b = perturbation_study(
            &cohorts(),
            PerturbationMode::UniformInRange,
            &DEFAULT_FRACTIONS,
            &WhiskerParams::default(),
            3,
        );
        assert_eq!(a, b);
        let mut out = Vec::new();
        write_perturbation_csv(&mut out, &a).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.lines().nth(1).unwrap().starts_with("uniform-in-range,5,"));
        assert_eq!(
            "two-million".parse::<PerturbationMode>().unwrap(),
            PerturbationMode::TwoMillion
        );
    }
}
