//! Ridge-regression priors for root cohorts.
//!
//! One model is trained per (country, compensation type) on the log values of
//! root cohorts. A fitted model supplies the prior for roots too small to be
//! used empirically.

mod features;
mod linalg;
mod ridge;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::FeatureDictionary;
pub use linalg::{cholesky_solve, NormalEquations};
pub use ridge::{evaluate_ridge, fit_ridge, ridge_solve, select_lambda, RidgeEvaluation, RidgeModel};

use crate::cohort::{CohortKey, CompensationType};
use crate::error::Result;
use crate::smoothing::{LogStats, RootPrior};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// When set, `lambda` is chosen from this grid by cross-validation.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Optional per-region wage index used as an extra numeric feature.
    #[serde(default)]
    pub region_wage_index: Option<BTreeMap<String, f64>>,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_folds() -> usize {
    5
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            lambda: default_lambda(),
            lambda_grid: None,
            folds: default_folds(),
            region_wage_index: None,
        }
    }
}

pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Fitted models keyed by (country, compensation type).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionPriors {
    pub h: usize,
    pub models: BTreeMap<String, BTreeMap<CompensationType, RidgeModel>>,
}

impl RegressionPriors {
    /// Trains one model per (country, type) from per-root raw values.
    /// Combinations that fail to fit are reported and skipped.
    pub fn train(
        roots: &BTreeMap<(CohortKey, CompensationType), Vec<f64>>,
        config: &RidgeConfig,
        h: usize,
        seed: u64,
    ) -> (RegressionPriors, Vec<String>) {
        let mut groups: BTreeMap<(String, CompensationType), Vec<(CohortKey, f64)>> = BTreeMap::new();
        for ((key, ty), values) in roots {
            debug_assert!(key.is_root());
            let g = groups.entry((key.country.clone(), *ty)).or_default();
            g.extend(values.iter().filter(|v| **v > 0.0).map(|v| (key.clone(), v.ln())));
        }
        let fitted: Vec<_> = groups
            .into_par_iter()
            .filter(|(_, samples)| !samples.is_empty())
            .map(|((country, ty), samples)| {
                let out = fit_group(&samples, config, seed);
                (country, ty, out)
            })
            .collect();
        let mut priors = RegressionPriors {
            h,
            models: BTreeMap::new(),
        };
        let mut warnings = Vec::new();
        for (country, ty, out) in fitted {
            match out {
                Ok(model) => {
                    priors.models.entry(country).or_default().insert(ty, model);
                }
                Err(e) => warnings.push(format!("no regression prior for {country}/{ty}: {e}")),
            }
        }
        (priors, warnings)
    }

    pub fn model(&self, country: &str, ty: CompensationType) -> Option<&RidgeModel> {
        self.models.get(country)?.get(&ty)
    }

    pub fn prior(&self, root: &CohortKey, ty: CompensationType) -> Option<LogStats> {
        self.model(&root.country, ty)?.predict_prior(root, self.h).ok()
    }

    /// Adapter exposing the priors of one compensation type to the smoother.
    pub fn for_type(&self, ty: CompensationType) -> TypedPrior<'_> {
        TypedPrior { priors: self, ty }
    }
}

fn fit_group(samples: &[(CohortKey, f64)], config: &RidgeConfig, seed: u64) -> Result<RidgeModel> {
    let dictionary = FeatureDictionary::from_roots(samples.iter().map(|(k, _)| k), config.region_wage_index.clone());
    let lambda = match &config.lambda_grid {
        Some(grid) if samples.len() >= config.folds => select_lambda(samples, &dictionary, grid, config.folds, seed)?.0,
        _ => config.lambda,
    };
    fit_ridge(samples, dictionary, lambda)
}

pub struct TypedPrior<'a> {
    priors: &'a RegressionPriors,
    ty: CompensationType,
}

impl RootPrior for TypedPrior<'_> {
    fn root_prior(&self, root: &CohortKey) -> Option<LogStats> {
        self.priors.prior(root, self.ty)
    }
}
