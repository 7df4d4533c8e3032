//! A two-entry cohort pulled toward its ancestor, then a small lattice
//! smoothed end to end.

use std::collections::BTreeMap;

use cohort_insights::cohort::{CohortKey, Dimension};
use cohort_insights::smoothing::{
    posterior, smooth_all, smoothed_percentiles, LogStats, NoRootPrior, Provenance, SmoothingConfig, SmoothingParams,
};

fn main() -> cohort_insights::Result<()> {
    let ancestor = LogStats {
        mu: 11.5,
        sigma2: 0.09,
        m: 50,
        provenance: Provenance::Empirical,
    };
    let post = posterior(&[11.0, 11.2], &ancestor, &SmoothingParams::default())?;
    let p = smoothed_percentiles(&post);
    println!(
        "posterior: mu {:.4}  tau2 {:.4}  sigma2 {:.4}",
        post.mu_hat, post.tau2_hat, post.sigma2_hat
    );
    println!("p10 {:.0}  median {:.0}  p90 {:.0}", p.p10, p.median, p.p90);

    let root = CohortKey::root("data scientist", "US", "new york");
    let phd = root.clone().with(Dimension::Degree, "phd");
    let values = BTreeMap::from([
        (root.clone(), (0..40).map(|i| 120_000.0 + 1_000.0 * i as f64).collect()),
        (phd.clone(), vec![150_000.0, 175_000.0, 160_000.0]),
    ]);
    let out = smooth_all(&values, &NoRootPrior, &SmoothingConfig::default());
    for (key, c) in &out {
        println!(
            "{key}: n={} smoothed={} median {:.0} [{:.0}, {:.0}]",
            c.count,
            c.is_smoothed(),
            c.percentiles.median,
            c.percentiles.p10,
            c.percentiles.p90
        );
    }
    Ok(())
}
