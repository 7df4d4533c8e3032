//! Grid search over (delta, eta) on a synthetic lattice, overall and for
//! the company and industry segments.

use cohort_insights::cohort::{CompensationType, Dimension};
use cohort_insights::eval::{generate, RefinementSpec, SyntheticSpec};
use cohort_insights::smoothing::NoRootPrior;
use cohort_insights::tuning::{grid_search_segments, make_split, write_ll_table, GridSpec, SegmentFilter};

fn main() -> cohort_insights::Result<()> {
    let spec = SyntheticSpec {
        roots: 60,
        refinements: vec![
            RefinementSpec {
                dimension: Dimension::Company,
                branching: 6,
                offset_sd: 0.08,
            },
            RefinementSpec {
                dimension: Dimension::Industry,
                branching: 2,
                offset_sd: 0.05,
            },
        ],
        leaf_sd_scale: (0.5, 1.5),
        cohort_size: (5, 19),
        seed: 9,
        ..SyntheticSpec::default()
    };
    let values = generate(&spec)?.lattice_values(CompensationType::BaseSalary, 3);
    let split = make_split(&values, 0.2, 20, 1)?;
    let segments = [
        SegmentFilter::All,
        SegmentFilter::Containing(Dimension::Company),
        SegmentFilter::Containing(Dimension::Industry),
    ];
    let results = grid_search_segments(&split, &GridSpec::default(), &segments, &NoRootPrior)?;
    for r in &results {
        println!(
            "{:<8} delta*={:<6} eta*={:<5} LL*={:.1} over {} held-out values",
            r.segment, r.delta_star, r.eta_star, r.ll_star, r.scored
        );
    }
    write_ll_table(std::io::stdout(), &results[..1])?;
    Ok(())
}
