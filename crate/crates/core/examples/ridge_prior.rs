//! Fits the title/region ridge model on synthetic log salaries and uses it
//! as a prior for a root cohort it has few rows for.

use cohort_insights::cohort::CohortKey;
use cohort_insights::regression::{evaluate_ridge, fit_ridge, FeatureDictionary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cohort_insights::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let titles = ["analyst", "engineer", "manager", "designer"];
    let regions = [("boston", 0.1), ("austin", -0.05), ("denver", 0.0)];
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (t, title) in titles.iter().enumerate() {
        for (region, effect) in regions {
            let key = CohortKey::root(*title, "US", region);
            let mean = 11.2 + 0.15 * t as f64 + effect;
            for i in 0..30 {
                let row = (key.clone(), mean + rng.random_range(-0.4..0.4));
                if i % 5 == 0 {
                    held.push(row)
                } else {
                    train.push(row)
                }
            }
        }
    }
    let dict = FeatureDictionary::from_roots(train.iter().map(|(k, _)| k), None);
    let model = fit_ridge(&train, dict, 1.0)?;
    let eval = evaluate_ridge(&model, &held)?;
    println!("held-out R2: row {:.3}, cohort mean {:.3}", eval.r2_row, eval.r2_cohort);

    let key = CohortKey::root("manager", "US", "boston");
    let prior = model.predict_prior(&key, 20)?;
    println!(
        "prior for {key}: median {:.0}, sigma2 {:.4}, weight m={}",
        prior.mu.exp(),
        prior.sigma2,
        prior.m
    );
    Ok(())
}
