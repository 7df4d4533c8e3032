//! Normal Q-Q comparison of raw and log salaries for one skewed cohort.

use cohort_insights::eval::qq_export;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

fn main() -> cohort_insights::Result<()> {
    let dist = LogNormal::new(90_000f64.ln(), 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let values: Vec<f64> = (0..500).map(|_| dist.sample(&mut rng)).collect();
    let report = qq_export(&values, 50)?;
    println!(
        "R2 against normal quantiles: raw {:.4}, log {:.4}",
        report.r2_raw, report.r2_log
    );
    for p in report.points.iter().step_by(10) {
        println!(
            "p={:.2}  z={:+.3}  raw={:>9.0}  log={:.3}",
            p.probability, p.theoretical, p.raw, p.log
        );
    }
    Ok(())
}
