//! Synthetic data and evaluation protocols: the spurious-data perturbation
//! study, the held-out quantile coverage test and Q-Q export.

mod coverage;
mod perturbation;
mod qq;
mod synthetic;

pub use coverage::{coverage_test, CohortCoverage, Coverage, CoverageParams, CoverageReport, CoverageSummary};
pub use perturbation::{
    added_count, perturbation_study, write_perturbation_csv, PerturbationMode, PerturbationRow, DEFAULT_FRACTIONS,
    MIN_STUDY_COHORT, MIN_WAGE, TWO_MILLION,
};
pub use qq::{linear_r2, qq_export, write_qq_csv, QqPoint, QqReport};
pub use synthetic::{generate, RefinementSpec, SyntheticData, SyntheticSpec, TrueParams};
