//! Run configuration: one strict JSON file holding every path and parameter.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::{CompensationType, Dimension, DEFAULT_K_MIN};
use crate::error::{Error, Result};
use crate::eval::{CoverageParams, PerturbationMode, RefinementSpec, SyntheticSpec, DEFAULT_FRACTIONS};
use crate::outliers::{
    map_external_limits, read_id_map, read_title_region_limits, read_wage_rows, OutlierConfig, SanityLimitRow,
    SanityLimits, TitleRegionLimits, WhiskerParams,
};
use crate::pipeline::{DiffThresholds, PipelineConfig, DEFAULT_HISTOGRAM_BUCKETS};
use crate::regression::RidgeConfig;
use crate::service::DEFAULT_DROP_ORDER;
use crate::smoothing::{SegmentOverride, SmoothingConfig, SmoothingParams, DEFAULT_DELTA, DEFAULT_ETA, DEFAULT_H};
use crate::tuning::{GridSpec, SegmentFilter, DEFAULT_HOLDOUT_FRACTION};

/// Input and output locations. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub submissions: Option<PathBuf>,
    /// Occupation wage rows: occ_id, ext_region_id, p10, p25, p50, p75, p90.
    pub external_wages: Option<PathBuf>,
    /// occ_id, title_id
    pub occupation_titles: Option<PathBuf>,
    /// ext_region_id, region_id
    pub region_map: Option<PathBuf>,
    /// Precomputed title/region limits; takes precedence over the three files above.
    pub external_limits: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub related_maps: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub previous_store: Option<PathBuf>,
    /// Where stage commands read and write intermediate artifacts.
    pub work_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingSection {
    pub delta: f64,
    pub eta: f64,
    pub segments: Vec<SegmentOverride>,
}

impl Default for SmoothingSection {
    fn default() -> Self {
        let d = SmoothingConfig::default();
        SmoothingSection {
            delta: DEFAULT_DELTA,
            eta: DEFAULT_ETA,
            segments: d.segments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSection {
    pub holdout_fraction: f64,
    pub deltas: Option<Vec<f64>>,
    pub etas: Option<Vec<f64>>,
    /// "all" or a dimension name; each gets its own argmax.
    pub segments: Vec<String>,
    #[serde(rename = "type")]
    pub comp_type: CompensationType,
}

impl Default for TuningSection {
    fn default() -> Self {
        TuningSection {
            holdout_fraction: DEFAULT_HOLDOUT_FRACTION,
            deltas: None,
            etas: None,
            segments: vec!["all".into()],
            comp_type: CompensationType::BaseSalary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceSection {
    pub bind: String,
    pub token: Option<String>,
    pub drop_order: Vec<Dimension>,
}

impl Default for ServiceSection {
    fn default() -> Self {
        ServiceSection {
            bind: "127.0.0.1:8080".into(),
            token: None,
            drop_order: DEFAULT_DROP_ORDER.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub synthetic: SyntheticSpec,
    pub modes: Vec<PerturbationMode>,
    pub fractions: Vec<f64>,
    pub coverage: CoverageParams,
    pub holdout_fraction: f64,
    pub qq_points: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            synthetic: SyntheticSpec {
                roots: 40,
                refinements: vec![RefinementSpec {
                    dimension: Dimension::Company,
                    branching: 15,
                    offset_sd: 0.1,
                }],
                cohort_size: (3, 19),
                ..SyntheticSpec::default()
            },
            modes: PerturbationMode::ALL.to_vec(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            coverage: CoverageParams::default(),
            holdout_fraction: DEFAULT_HOLDOUT_FRACTION,
            qq_points: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub paths: Paths,
    pub k_min: usize,
    pub h: usize,
    pub smoothing: SmoothingSection,
    pub whiskers: WhiskerParams,
    /// Replaces the built-in US limits when present.
    pub sanity_limits: Option<Vec<SanityLimitRow>>,
    pub ridge: RidgeConfig,
    pub histogram_buckets: usize,
    pub diff: DiffThresholds,
    pub tuning: TuningSection,
    pub service: ServiceSection,
    pub eval: EvalSection,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            paths: Paths::default(),
            k_min: DEFAULT_K_MIN,
            h: DEFAULT_H,
            smoothing: SmoothingSection::default(),
            whiskers: WhiskerParams::default(),
            sanity_limits: None,
            ridge: RidgeConfig::default(),
            histogram_buckets: DEFAULT_HISTOGRAM_BUCKETS,
            diff: DiffThresholds::default(),
            tuning: TuningSection::default(),
            service: ServiceSection::default(),
            eval: EvalSection::default(),
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl Config {
    /// Parses and validates a config file. Parse errors carry line and column.
    pub fn load(path: &Path) -> Result<Config> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        let mut config: Config =
            serde_json::from_str(&text).map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.paths.resolve(base);
        config
            .validate()
            .map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_min == 0 {
            return Err(Error::InvalidParameter("k_min must be positive".into()));
        }
        self.smoothing_config()?;
        positive("whiskers.lower_factor", self.whiskers.lower_factor)?;
        positive("whiskers.upper_factor", self.whiskers.upper_factor)?;
        positive(
            "whiskers.max_type_outlier_fraction",
            self.whiskers.max_type_outlier_fraction,
        )?;
        positive(
            "whiskers.max_cohort_outlier_fraction",
            self.whiskers.max_cohort_outlier_fraction,
        )?;
        self.sanity()?;
        positive("ridge.lambda", self.ridge.lambda)?;
        if let Some(grid) = &self.ridge.lambda_grid {
            grid.iter().try_for_each(|l| positive("ridge.lambda_grid", *l))?;
        }
        if self.ridge.folds < 2 {
            return Err(Error::InvalidParameter("ridge.folds must be at least 2".into()));
        }
        if self.histogram_buckets == 0 {
            return Err(Error::InvalidParameter("histogram_buckets must be positive".into()));
        }
        positive("diff.max_count_change", self.diff.max_count_change)?;
        positive("diff.max_median_change", self.diff.max_median_change)?;
        fraction("tuning.holdout_fraction", self.tuning.holdout_fraction)?;
        self.grid()?;
        self.segment_filters()?;
        self.eval.synthetic.validate()?;
        CoverageParams::new(self.eval.coverage.alpha, self.eval.coverage.beta)?;
        fraction("eval.holdout_fraction", self.eval.holdout_fraction)?;
        if self.eval.fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
            return Err(Error::InvalidParameter("eval.fractions must lie in [0, 1)".into()));
        }
        if self.eval.qq_points < 2 {
            return Err(Error::InvalidParameter("eval.qq_points must be at least 2".into()));
        }
        Ok(())
    }

    pub fn smoothing_config(&self) -> Result<SmoothingConfig> {
        let global = SmoothingParams::new(self.smoothing.delta, self.smoothing.eta, self.h)?;
        for s in &self.smoothing.segments {
            SmoothingParams::new(s.delta, s.eta, self.h)?;
        }
        Ok(SmoothingConfig {
            global,
            segments: self.smoothing.segments.clone(),
        })
    }

    pub fn sanity(&self) -> Result<SanityLimits> {
        match &self.sanity_limits {
            Some(rows) => SanityLimits::from_rows(rows),
            None => Ok(SanityLimits::us_default()),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let d = GridSpec::default();
        GridSpec::new(
            self.tuning.deltas.clone().unwrap_or(d.deltas),
            self.tuning.etas.clone().unwrap_or(d.etas),
        )
    }

    pub fn segment_filters(&self) -> Result<Vec<SegmentFilter>> {
        if self.tuning.segments.is_empty() {
            return Err(Error::InvalidParameter("tuning.segments must not be empty".into()));
        }
        self.tuning
            .segments
            .iter()
            .map(|s| match s.as_str() {
                "all" => Ok(SegmentFilter::All),
                other => other
                    .parse::<Dimension>()
                    .map(SegmentFilter::Containing)
                    .map_err(Error::InvalidParameter),
            })
            .collect()
    }

    /// Title/region limits from `external_limits`, or mapped from the three
    /// external files when all are given; `None` skips the external stage.
    pub fn external_limits(&self) -> Result<Option<TitleRegionLimits>> {
        let p = &self.paths;
        if let Some(path) = &p.external_limits {
            return read_title_region_limits(path).map(Some);
        }
        match (&p.external_wages, &p.occupation_titles, &p.region_map) {
            (Some(w), Some(o), Some(r)) => {
                let (limits, report) =
                    map_external_limits(&read_wage_rows(w)?, &read_id_map(o)?, &read_id_map(r)?, &self.whiskers);
                for (occ, region) in report.invalid_rows.iter().chain(&report.degenerate_rows) {
                    log::warn!("external row {occ}/{region} skipped");
                }
                Ok(Some(limits))
            }
            (None, None, None) => Ok(None),
            _ => Err(Error::InvalidParameter(
                "external_wages, occupation_titles and region_map must be given together".into(),
            )),
        }
    }

    pub fn outlier_config(&self, external: Option<TitleRegionLimits>) -> Result<OutlierConfig> {
        Ok(OutlierConfig {
            sanity: self.sanity()?,
            external,
            whiskers: self.whiskers,
            k_min: self.k_min,
        })
    }

    pub fn pipeline_config(&self, external: Option<TitleRegionLimits>) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            outliers: self.outlier_config(external)?,
            smoothing: self.smoothing_config()?,
            ridge: self.ridge.clone(),
            histogram_buckets: self.histogram_buckets,
            seed: self.seed,
        })
    }

    pub fn work_dir(&self) -> PathBuf {
        self.paths.work_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.submissions,
            &mut self.external_wages,
            &mut self.occupation_titles,
            &mut self.region_map,
            &mut self.external_limits,
            &mut self.overrides,
            &mut self.related_maps,
            &mut self.store,
            &mut self.previous_store,
            &mut self.work_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}
