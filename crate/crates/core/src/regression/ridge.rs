use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureDictionary, NormalEquations};
use crate::cohort::CohortKey;
use crate::error::{Error, Result};
use crate::smoothing::{LogStats, Provenance};

/// Ridge model of root-cohort log-compensation. Serialized as
/// `{lambda, gamma2, feature_dictionary, beta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    pub gamma2: f64,
    pub feature_dictionary: FeatureDictionary,
    pub beta: Vec<f64>,
}

/// Dense ridge solve `(X'X + lambda I)^-1 X'U`. Every coordinate, the
/// intercept included, is penalized.
pub fn ridge_solve(design: &[Vec<f64>], response: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let dim = design.first().map_or(0, Vec::len);
    let mut ne = NormalEquations::new(dim);
    for (x, u) in design.iter().zip(response) {
        ne.add_row(x, *u);
    }
    ne.solve(lambda)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits a model on `(root key, log value)` samples. Samples sharing a root
/// share a feature vector, so the normal equations are accumulated per root.
pub fn fit_ridge(samples: &[(CohortKey, f64)], dictionary: FeatureDictionary, lambda: f64) -> Result<RidgeModel> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut groups: BTreeMap<&CohortKey, (usize, f64)> = BTreeMap::new();
    for (k, u) in samples {
        let g = groups.entry(k).or_default();
        g.0 += 1;
        g.1 += u;
    }
    let mut features = BTreeMap::new();
    let mut ne = NormalEquations::new(dictionary.dim());
    for (k, (count, sum)) in &groups {
        let x = dictionary.encode(k)?;
        ne.add_group(&x, *count, *sum);
        features.insert(*k, x);
    }
    let beta = ne.solve(lambda)?;
    let rss: f64 = samples
        .iter()
        .map(|(k, u)| {
            let r = u - dot(&features[k], &beta);
            r * r
        })
        .sum();
    Ok(RidgeModel {
        lambda,
        gamma2: rss / samples.len() as f64,
        feature_dictionary: dictionary,
        beta,
    })
}

impl RidgeModel {
    pub fn predict_mean(&self, key: &CohortKey) -> Result<f64> {
        Ok(dot(&self.feature_dictionary.encode(key)?, &self.beta))
    }

    /// Prior for a root cohort: the predicted log-mean with the model's
    /// residual variance, weighted as `h` samples.
    pub fn predict_prior(&self, key: &CohortKey, h: usize) -> Result<LogStats> {
        Ok(LogStats {
            mu: self.predict_mean(key)?,
            sigma2: self.gamma2,
            m: h,
            provenance: Provenance::RegressionPrior,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeEvaluation {
    /// Mean squared residual over held-out rows.
    pub cv_error: f64,
    /// R² over individual rows.
    pub r2_row: f64,
    /// R² over one row per root, observed value = mean log value of the root.
    pub r2_cohort: f64,
}

fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let tss: f64 = observed.iter().map(|o| (o - mean) * (o - mean)).sum();
    let rss: f64 = observed.iter().zip(predicted).map(|(o, p)| (o - p) * (o - p)).sum();
    if tss == 0.0 {
        return if rss == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - rss / tss
}

pub fn evaluate_ridge(model: &RidgeModel, held_out: &[(CohortKey, f64)]) -> Result<RidgeEvaluation> {
    if held_out.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut predictions = BTreeMap::new();
    let mut groups: BTreeMap<&CohortKey, Vec<f64>> = BTreeMap::new();
    for (k, u) in held_out {
        if !predictions.contains_key(k) {
            predictions.insert(k, model.predict_mean(k)?);
        }
        groups.entry(k).or_default().push(*u);
    }
    let observed: Vec<f64> = held_out.iter().map(|(_, u)| *u).collect();
    let predicted: Vec<f64> = held_out.iter().map(|(k, _)| predictions[k]).collect();
    let cv_error = observed
        .iter()
        .zip(&predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .sum::<f64>()
        / observed.len() as f64;

    let cohort_observed: Vec<f64> = groups
        .values()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let cohort_predicted: Vec<f64> = groups.keys().map(|k| predictions[k]).collect();
    Ok(RidgeEvaluation {
        cv_error,
        r2_row: r_squared(&observed, &predicted),
        r2_cohort: r_squared(&cohort_observed, &cohort_predicted),
    })
}

/// Picks `lambda` from `grid` by k-fold cross-validated mean squared error.
/// Returns the choice and the error for each grid value. Ties go to the
/// larger penalty.
pub fn select_lambda(
    samples: &[(CohortKey, f64)],
    dictionary: &FeatureDictionary,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() || folds < 2 || samples.len() < folds {
        return Err(Error::InvalidParameter(
            "lambda selection needs a non-empty grid, >= 2 folds and at least one sample per fold".into(),
        ));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; samples.len()];
        for (pos, idx) in order.iter().enumerate() {
            f[*idx] = pos % folds;
        }
        f
    };
    let mut table = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut sse = 0.0;
        for fold in 0..folds {
            let (test, train): (Vec<_>, Vec<_>) = samples.iter().enumerate().partition(|(i, _)| fold_of[*i] == fold);
            let train: Vec<(CohortKey, f64)> = train.into_iter().map(|(_, s)| s.clone()).collect();
            let model = fit_ridge(&train, dictionary.clone(), lambda)?;
            for (_, (k, u)) in test {
                let r = u - model.predict_mean(k)?;
                sse += r * r;
            }
        }
        table.push((lambda, sse / samples.len() as f64));
    }
    let best = table
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.total_cmp(&a.0)))
        .expect("non-empty grid")
        .0;
    Ok((best, table))
}
