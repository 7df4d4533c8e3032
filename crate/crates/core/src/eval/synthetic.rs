use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cohort::{materialize_cohorts, CohortKey, CompensationEntry, CompensationType, Dimension, RawSubmission};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSpec {
    pub dimension: Dimension,
    /// Number of values per root.
    pub branching: usize,
    /// Standard deviation of each value's log-offset from the root.
    pub offset_sd: f64,
}

/// Parameters of a synthetic data set. Every root gets a log-median and a
/// log-sd; each combination of refinement values is a leaf cohort whose
/// log-mean is the root's plus one offset per refinement value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub roots: usize,
    /// Roots are laid out on a title x region grid with this many regions.
    pub regions: usize,
    pub country: String,
    pub log_median_range: (f64, f64),
    pub log_sd_range: (f64, f64),
    pub refinements: Vec<RefinementSpec>,
    /// Each leaf's log-sd is the root's times a factor drawn from this range.
    pub leaf_sd_scale: (f64, f64),
    /// Inclusive size range of each leaf cohort.
    pub cohort_size: (usize, usize),
    /// Probability that an entry also reports an annual bonus.
    pub bonus_probability: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            roots: 20,
            regions: 4,
            country: "US".into(),
            log_median_range: (40_000f64.ln(), 200_000f64.ln()),
            log_sd_range: (0.15, 0.35),
            refinements: Vec::new(),
            leaf_sd_scale: (1.0, 1.0),
            cohort_size: (20, 60),
            bonus_probability: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.roots == 0 || self.regions == 0 {
            return bad("roots and regions must be positive");
        }
        if !(self.log_sd_range.0 > 0.0 && self.log_sd_range.0 <= self.log_sd_range.1) {
            return bad("log-sd range must be positive and ordered");
        }
        if self.log_median_range.0 > self.log_median_range.1 {
            return bad("log-median range must be ordered");
        }
        if !(self.leaf_sd_scale.0 > 0.0 && self.leaf_sd_scale.0 <= self.leaf_sd_scale.1) {
            return bad("leaf sd scale range must be positive and ordered");
        }
        if self.cohort_size.0 == 0 || self.cohort_size.0 > self.cohort_size.1 {
            return bad("cohort size range must be positive and ordered");
        }
        if self
            .refinements
            .iter()
            .any(|r| r.branching == 0 || !(r.offset_sd > 0.0))
        {
            return bad("refinements need positive branching and offset sd");
        }
        if !(0.0..=1.0).contains(&self.bonus_probability) {
            return bad("bonus probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Log-normal parameters of a generated cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub mu: f64,
    pub sigma: f64,
}

impl TrueParams {
    pub fn quantile(&self, z: f64) -> f64 {
        (self.mu + z * self.sigma).exp()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub submissions: Vec<RawSubmission>,
    /// Parameters of every root and leaf cohort.
    pub truth: BTreeMap<CohortKey, TrueParams>,
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn leaf_keys(root: &CohortKey, refinements: &[RefinementSpec]) -> Vec<(CohortKey, Vec<(usize, usize)>)> {
    let mut out = vec![(root.clone(), Vec::new())];
    for (ri, r) in refinements.iter().enumerate() {
        out = out
            .into_iter()
            .flat_map(|(k, path)| {
                (0..r.branching).map(move |v| {
                    let mut p = path.clone();
                    p.push((ri, v));
                    (k.clone().with(r.dimension, format!("{}-{v:02}", r.dimension)), p)
                })
            })
            .collect();
    }
    out
}

/// Draws a data set. Output is a function of the spec alone.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut submissions = Vec::new();
    let mut truth = BTreeMap::new();
    for i in 0..spec.roots {
        let root = CohortKey::root(
            format!("title-{:03}", i / spec.regions),
            spec.country.clone(),
            format!("region-{:02}", i % spec.regions),
        );
        let mu = uniform(&mut rng, spec.log_median_range);
        let sigma = uniform(&mut rng, spec.log_sd_range);
        truth.insert(root.clone(), TrueParams { mu, sigma });
        let offsets: Vec<Vec<f64>> = spec
            .refinements
            .iter()
            .map(|r| (0..r.branching).map(|_| r.offset_sd * std.sample(&mut rng)).collect())
            .collect();
        for (leaf, path) in leaf_keys(&root, &spec.refinements) {
            let leaf_mu = mu + path.iter().map(|(ri, v)| offsets[*ri][*v]).sum::<f64>();
            let sigma = if path.is_empty() {
                sigma
            } else {
                sigma * uniform(&mut rng, spec.leaf_sd_scale)
            };
            truth.insert(leaf.clone(), TrueParams { mu: leaf_mu, sigma });
            let n = rng.random_range(spec.cohort_size.0..=spec.cohort_size.1);
            for j in 0..n {
                let base = (leaf_mu + sigma * std.sample(&mut rng)).exp();
                let mut entry = CompensationEntry::new(format!("{}#{j}", leaf.canonical()), base);
                if spec.bonus_probability > 0.0 && rng.random_bool(spec.bonus_probability) {
                    let ratio = (0.1f64.ln() + 0.3 * std.sample(&mut rng)).exp();
                    entry = entry.with(CompensationType::AnnualBonus, base * ratio);
                }
                submissions.push(RawSubmission::new(&leaf, entry));
            }
        }
    }
    Ok(SyntheticData { submissions, truth })
}

impl SyntheticData {
    /// Values of `ty` grouped by the full key of each submission.
    pub fn leaf_values(&self, ty: CompensationType) -> BTreeMap<CohortKey, Vec<f64>> {
        let mut out: BTreeMap<CohortKey, Vec<f64>> = BTreeMap::new();
        for s in &self.submissions {
            if let (Some(k), Some(v)) = (s.full_key(), s.entry.amount(ty)) {
                out.entry(k).or_default().push(v);
            }
        }
        out
    }

    /// Values of `ty` for every lattice node with at least `k_min` entries.
    pub fn lattice_values(&self, ty: CompensationType, k_min: usize) -> BTreeMap<CohortKey, Vec<f64>> {
        materialize_cohorts(&self.submissions, k_min)
            .cohorts
            .into_iter()
            .map(|(k, c)| (k, c.values(ty)))
            .filter(|(_, v)| !v.is_empty())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::Percentiles;
    use crate::smoothing::Z_90;

    #[test]
    fn fixed_seed_is_reproducible() {
        let spec = SyntheticSpec {
            seed: 11,
            ..SyntheticSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.submissions, b.submissions);
    }

    #[test]
    fn tiny_sd_gives_constant_cohorts() {
        let spec = SyntheticSpec {
            roots: 3,
            log_sd_range: (1e-12, 1e-12),
            log_median_range: (11.0, 11.0),
            ..SyntheticSpec::default()
        };
        let data = generate(&spec).unwrap();
        for v in data.leaf_values(CompensationType::BaseSalary).values().flatten() {
            assert!((v / 11f64.exp() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn large_root_matches_analytic_quantiles() {
        let spec = SyntheticSpec {
            roots: 1,
            cohort_size: (100_000, 100_000),
            seed: 5,
            ..SyntheticSpec::default()
        };
        let data = generate(&spec).unwrap();
        let (key, truth) = data.truth.iter().next().unwrap();
        let values = &data.leaf_values(CompensationType::BaseSalary)[key];
        let p = Percentiles::empirical(values).unwrap();
        // 1.2816 is the standard normal 0.9 quantile to four places
        for (got, z) in [(p.p10, -1.2816), (p.median, 0.0), (p.p90, 1.2816)] {
            assert!(
                (got / truth.quantile(z) - 1.0).abs() < 0.01,
                "{got} vs {}",
                truth.quantile(z)
            );
        }
        assert!((Z_90 - 1.2816).abs() < 1e-3);
    }

    #[test]
    fn refinements_build_a_lattice() {
        let spec = SyntheticSpec {
            roots: 2,
            refinements: vec![
                RefinementSpec {
                    dimension: Dimension::Company,
                    branching: 3,
                    offset_sd: 0.1,
                },
                RefinementSpec {
                    dimension: Dimension::Industry,
                    branching: 2,
                    offset_sd: 0.1,
                },
            ],
            cohort_size: (5, 5),
            ..SyntheticSpec::default()
        };
        let data = generate(&spec).unwrap();
        assert_eq!(data.submissions.len(), 2 * 6 * 5);
        assert_eq!(data.truth.len(), 2 * (1 + 6));
        let lattice = data.lattice_values(CompensationType::BaseSalary, 3);
        // per root: root, 3 company, 2 industry, 6 leaves
        assert_eq!(lattice.len(), 2 * 12);
        assert!(generate(&SyntheticSpec {
            log_sd_range: (0.0, 0.1),
            ..spec
        })
        .is_err());
    }
}
