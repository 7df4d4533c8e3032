//! Held-out coverage of the smoothed p10-p90 interval against the raw
//! empirical one, by cohort size.

use cohort_insights::cohort::{CompensationType, Dimension};
use cohort_insights::eval::{coverage_test, generate, CoverageParams, RefinementSpec, SyntheticSpec};
use cohort_insights::smoothing::{NoRootPrior, SmoothingConfig};

fn main() -> cohort_insights::Result<()> {
    let spec = SyntheticSpec {
        roots: 40,
        refinements: vec![RefinementSpec {
            dimension: Dimension::Company,
            branching: 15,
            offset_sd: 0.1,
        }],
        cohort_size: (3, 19),
        seed: 2,
        ..SyntheticSpec::default()
    };
    let values = generate(&spec)?.lattice_values(CompensationType::BaseSalary, 3);
    let report = coverage_test(
        &values,
        CoverageParams::default(),
        0.1,
        &SmoothingConfig::default(),
        &NoRootPrior,
        3,
    )?;
    println!(
        "sizes   cohorts  smoothed  empirical  (ideal {:.2})",
        report.params.ideal()
    );
    for (lo, hi) in [(3, 4), (5, 9), (10, 19)] {
        let s = report.summary(lo..=hi);
        println!(
            "{lo:>2}-{hi:<3} {:>8} {:>9.3} {:>10.3}",
            s.cohorts, s.smoothed.covered, s.empirical.covered
        );
    }
    let all = report.overall();
    println!(
        "all    {:>8} {:>9.3} {:>10.3}",
        all.cohorts, all.smoothed.covered, all.empirical.covered
    );
    Ok(())
}
