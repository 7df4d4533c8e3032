//! Injects spurious entries into synthetic cohorts and reports how much the
//! box-and-whisker stage removes and how far the quantiles move.

use cohort_insights::cohort::CompensationType;
use cohort_insights::eval::{
    generate, perturbation_study, write_perturbation_csv, PerturbationMode, SyntheticSpec, DEFAULT_FRACTIONS,
};
use cohort_insights::outliers::WhiskerParams;

fn main() -> cohort_insights::Result<()> {
    let spec = SyntheticSpec {
        roots: 100,
        cohort_size: (40, 120),
        seed: 4,
        ..SyntheticSpec::default()
    };
    let cohorts: Vec<Vec<f64>> = generate(&spec)?
        .leaf_values(CompensationType::BaseSalary)
        .into_values()
        .collect();
    let mut rows = Vec::new();
    for mode in [
        PerturbationMode::TwoMillion,
        PerturbationMode::MinWage,
        PerturbationMode::UniformInRange,
    ] {
        rows.extend(perturbation_study(
            &cohorts,
            mode,
            &DEFAULT_FRACTIONS,
            &WhiskerParams::default(),
            1,
        ));
    }
    write_perturbation_csv(std::io::stdout(), &rows)
}
