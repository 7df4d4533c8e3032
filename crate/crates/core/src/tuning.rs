//! Held-out log-likelihood grid search for the smoothing parameters
//! `(delta, eta)`, overall and per segment.
//!
//! Held-out entries are scored with the normal density of `ln(value)` under
//! each cohort's posterior predictive `N(mu_hat, sigma2_hat)`. The log-Jacobian
//! `-sum ln(value)` is the same for every grid cell and is left out.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{CohortKey, Dimension};
use crate::error::{Error, Result};
use crate::smoothing::{smooth_all, RootPrior, SmoothingConfig, SmoothingOutcome, SmoothingParams};

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.1;

/// Per-cohort split of raw values for one compensation type.
///
/// `train` holds every cohort; split cohorts keep only their training part.
/// `test` holds the held-out values of split cohorts.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub seed: u64,
    pub h: usize,
    pub train: BTreeMap<CohortKey, Vec<f64>>,
    pub test: BTreeMap<CohortKey, Vec<f64>>,
}

/// Number of entries held out of a cohort of size `n`.
pub fn holdout_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).max(1).min(n.saturating_sub(1))
}

/// Splits every cohort with `2 <= n < h`; larger and singleton cohorts go to
/// training unchanged. Cohorts are visited in key order with one seeded
/// generator, so the split is a function of the inputs and `seed`.
pub fn make_split(cohorts: &BTreeMap<CohortKey, Vec<f64>>, fraction: f64, h: usize, seed: u64) -> Result<HoldoutSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadFraction(fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = BTreeMap::new();
    let mut test = BTreeMap::new();
    for (key, values) in cohorts {
        let n = values.len();
        if n < 2 || n >= h {
            train.insert(key.clone(), values.clone());
            continue;
        }
        let k = holdout_size(n, fraction);
        let mut held = vec![false; n];
        for i in sample(&mut rng, n, k) {
            held[i] = true;
        }
        let (t, s): (Vec<_>, Vec<_>) = values.iter().zip(&held).partition(|(_, h)| !**h);
        train.insert(key.clone(), t.into_iter().map(|(v, _)| *v).collect());
        test.insert(key.clone(), s.into_iter().map(|(v, _)| *v).collect());
    }
    Ok(HoldoutSplit { seed, h, train, test })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub deltas: Vec<f64>,
    pub etas: Vec<f64>,
}

impl GridSpec {
    pub fn new(deltas: Vec<f64>, etas: Vec<f64>) -> Result<Self> {
        let ok = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !ok(&deltas) || !ok(&etas) {
            return Err(Error::InvalidParameter(
                "grid values must be positive and finite".into(),
            ));
        }
        Ok(GridSpec { deltas, etas })
    }

    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().copied().fold(f64::MIN, f64::max)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            deltas: vec![1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0, 250.0, 500.0, 1000.0],
            etas: (0..12).map(|r| 0.01 * f64::from(1u32 << r)).collect(),
        }
    }
}

/// Which held-out cohorts count towards the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentFilter {
    All,
    Containing(Dimension),
}

impl SegmentFilter {
    pub fn matches(&self, key: &CohortKey) -> bool {
        match self {
            SegmentFilter::All => true,
            SegmentFilter::Containing(d) => key.has(*d),
        }
    }
}

impl fmt::Display for SegmentFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentFilter::All => f.write_str("all"),
            SegmentFilter::Containing(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlRow {
    pub delta: f64,
    pub eta: f64,
    pub ll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub segment: SegmentFilter,
    pub delta_star: f64,
    pub eta_star: f64,
    pub ll_star: f64,
    /// Held-out values scored in each cell.
    pub scored: usize,
    pub table: Vec<LlRow>,
}

fn log_normal_density(y: f64, mu: f64, sigma2: f64) -> f64 {
    -0.5 * (2.0 * PI * sigma2).ln() - (y - mu) * (y - mu) / (2.0 * sigma2)
}

/// Held-out log-likelihood per cohort for one `(delta, eta)`. Cohorts that end
/// up unsmoothed (no ancestor and no prior) are not scored.
fn cell_scores(
    split: &HoldoutSplit,
    params: SmoothingParams,
    prior: &dyn RootPrior,
) -> BTreeMap<CohortKey, (f64, usize)> {
    let smoothed = smooth_all(&split.train, prior, &SmoothingConfig::uniform(params));
    split
        .test
        .iter()
        .filter_map(|(key, held)| {
            let s = smoothed.get(key)?;
            if matches!(s.outcome, SmoothingOutcome::Unsmoothed { .. }) {
                return None;
            }
            let ll = held
                .iter()
                .map(|v| log_normal_density(v.ln(), s.stats.mu, s.stats.sigma2))
                .sum();
            Some((key.clone(), (ll, held.len())))
        })
        .collect()
}

/// Evaluates every grid cell once and reports the table and argmax for each
/// segment. Ties go to the smaller `delta`, then the smaller `eta`.
pub fn grid_search_segments(
    split: &HoldoutSplit,
    grid: &GridSpec,
    segments: &[SegmentFilter],
    prior: &dyn RootPrior,
) -> Result<Vec<GridResult>> {
    for seg in segments {
        if !split.test.keys().any(|k| seg.matches(k)) {
            return Err(Error::EmptySegment(seg.to_string()));
        }
    }
    let cells: Vec<(f64, f64)> = grid
        .deltas
        .iter()
        .flat_map(|d| grid.etas.iter().map(move |e| (*d, *e)))
        .collect();
    let scores: Vec<BTreeMap<CohortKey, (f64, usize)>> = cells
        .par_iter()
        .map(|&(delta, eta)| {
            let params = SmoothingParams::new(delta, eta, split.h)?;
            Ok(cell_scores(split, params, prior))
        })
        .collect::<Result<_>>()?;

    segments
        .iter()
        .map(|seg| {
            let mut table = Vec::with_capacity(cells.len());
            let mut scored = 0;
            for (&(delta, eta), s) in cells.iter().zip(&scores) {
                let (ll, count) = s
                    .iter()
                    .filter(|(k, _)| seg.matches(k))
                    .fold((0.0, 0), |acc, (_, (ll, c))| (acc.0 + ll, acc.1 + c));
                scored = count;
                table.push(LlRow { delta, eta, ll });
            }
            if scored == 0 {
                return Err(Error::EmptySegment(seg.to_string()));
            }
            let best = *table
                .iter()
                .min_by(|a, b| {
                    b.ll.total_cmp(&a.ll)
                        .then(a.delta.total_cmp(&b.delta))
                        .then(a.eta.total_cmp(&b.eta))
                })
                .expect("non-empty grid");
            Ok(GridResult {
                segment: *seg,
                delta_star: best.delta,
                eta_star: best.eta,
                ll_star: best.ll,
                scored,
                table,
            })
        })
        .collect()
}

pub fn grid_search(
    split: &HoldoutSplit,
    grid: &GridSpec,
    segment: SegmentFilter,
    prior: &dyn RootPrior,
) -> Result<GridResult> {
    Ok(grid_search_segments(split, grid, &[segment], prior)?.remove(0))
}

/// Held-out log-likelihood at `(delta, eta)` and at the grid's largest
/// `delta` with the same `eta`, where the ancestor carries almost no weight.
pub fn goodness_of_fit_compare(
    split: &HoldoutSplit,
    delta: f64,
    eta: f64,
    grid: &GridSpec,
    prior: &dyn RootPrior,
) -> Result<(f64, f64)> {
    let total = |d: f64| -> Result<f64> {
        let params = SmoothingParams::new(d, eta, split.h)?;
        Ok(cell_scores(split, params, prior).values().map(|(ll, _)| ll).sum())
    };
    Ok((total(delta)?, total(grid.max_delta())?))
}

/// CSV table `delta,eta,segment,LL` for a set of segment results.
pub fn write_ll_table<W: std::io::Write>(writer: W, results: &[GridResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["delta", "eta", "segment", "LL"])?;
    for r in results {
        let seg = r.segment.to_string();
        for row in &r.table {
            w.write_record([
                row.delta.to_string(),
                row.eta.to_string(),
                seg.clone(),
                format!("{:.6}", row.ll),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
