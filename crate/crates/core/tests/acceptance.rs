//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines always appear in `cargo test` output; exits non-zero if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use cohort_insights::cli::Config;
use cohort_insights::cohort::{Cohort, CohortKey, CompensationEntry, CompensationType, Dimension, RawSubmission};
use cohort_insights::eval::{
    coverage_test, generate, perturbation_study, CoverageParams, PerturbationMode, PerturbationRow, RefinementSpec,
    SyntheticSpec, DEFAULT_FRACTIONS,
};
use cohort_insights::outliers::{stage3_box_whisker, whisker_limits, WhiskerParams};
use cohort_insights::pipeline::{build, Deletion, InsightStore, OverrideSet, RelatedMaps};
use cohort_insights::regression::{evaluate_ridge, fit_ridge, ridge_solve, FeatureDictionary};
use cohort_insights::service::http::{router, ServiceState};
use cohort_insights::service::{
    execute, find_criteria, generalization_chain, CriteriaQuery, InsightQuery, InsightResponse, RootQuery, Status,
    TopQuery, DEFAULT_DROP_ORDER,
};
use cohort_insights::smoothing::{
    posterior, smoothed_percentiles, LogStats, NoRootPrior, Provenance, SmoothingConfig, SmoothingParams,
};
use cohort_insights::tuning::{grid_search, make_split, GridSpec, SegmentFilter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tower::ServiceExt;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_s) {
        Err(format!("took {elapsed:.1?}, limit {limit_s} s"))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------- 1

/// Simpson's rule on `n` (odd) equally spaced points of `log_f` over [a, b],
/// returning the log of the integral.
fn log_simpson(a: f64, b: f64, n: usize, log_f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    let logs: Vec<f64> = (0..n).map(|i| log_f(a + h * i as f64)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * (l - max).exp()
        })
        .sum();
    max + (sum * h / 3.0).ln()
}

/// Unnormalized log joint posterior of (nu, precision) as the product of the
/// likelihood, the normal prior on nu and the Gamma prior on the precision.
fn log_joint(y: &[f64], nu: f64, p: f64, mu: f64, n0: f64, shape: f64, rate: f64) -> f64 {
    let lik: f64 = y.iter().map(|yi| 0.5 * p.ln() - 0.5 * p * (yi - nu) * (yi - nu)).sum();
    let prior_nu = 0.5 * (n0 * p).ln() - 0.5 * n0 * p * (nu - mu) * (nu - mu);
    let prior_p = (shape - 1.0) * p.ln() - rate * p;
    lik + prior_nu + prior_p
}

/// Posterior mean of the precision by nested quadrature: nu is integrated
/// out numerically at each precision, then the precision on a log scale.
fn numeric_precision_mean(y: &[f64], anc: &LogStats, delta: f64, eta: f64) -> f64 {
    let n = y.len() as f64;
    let n0 = anc.m as f64 / delta;
    let y_bar = y.iter().sum::<f64>() / n;
    let (shape, rate) = (eta / anc.sigma2, eta);
    let log_marginal = |p: f64| {
        let s = 1.0 / ((n + n0) * p).sqrt();
        let (lo, hi) = (y_bar.min(anc.mu) - 14.0 * s, y_bar.max(anc.mu) + 14.0 * s);
        log_simpson(lo, hi, 401, |nu| log_joint(y, nu, p, anc.mu, n0, shape, rate))
    };
    // density of t = ln p is f(e^t) e^t
    let log_g = |t: f64| log_marginal(t.exp()) + t;
    let scan: Vec<(f64, f64)> = (0..=600)
        .map(|i| -30.0 + 0.1 * i as f64)
        .map(|t| (t, log_g(t)))
        .collect();
    let peak = scan.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let inside: Vec<f64> = scan.iter().filter(|s| s.1 > peak - 45.0).map(|s| s.0).collect();
    let (lo, hi) = (inside[0] - 0.1, inside[inside.len() - 1] + 0.1);
    let points = 1201;
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| log_g(lo + step * i as f64)).collect();
    let at = |t: f64| grid[((t - lo) / step).round() as usize];
    let log_norm = log_simpson(lo, hi, points, at);
    let log_first = log_simpson(lo, hi, points, |t| at(t) + t);
    (log_first - log_norm).exp()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=10);
        let center = 11.0 + rng.random_range(-0.5..0.5);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let y: Vec<f64> = (0..n).map(|_| center + noise.sample(&mut rng)).collect();
        let anc = LogStats {
            mu: 11.0 + rng.random_range(-0.3..0.3),
            sigma2: rng.random_range(0.02..0.2),
            m: rng.random_range(5..200),
            provenance: Provenance::Empirical,
        };
        let delta = rng.random_range(0.0f64..4.0).exp();
        let eta = rng.random_range(0.02..2.0);
        let params = SmoothingParams::new(delta, eta, 20).map_err(|e| e.to_string())?;
        let post = posterior(&y, &anc, &params).map_err(|e| e.to_string())?;

        let closed = 1.0 / post.tau2_hat;
        let numeric = numeric_precision_mean(&y, &anc, delta, eta);
        let rel = (closed - numeric).abs() / numeric;
        worst = worst.max(rel);
        ensure!(
            rel <= 1e-4,
            "precision mean {closed} vs quadrature {numeric} (rel {rel:.2e})"
        );

        let n0 = anc.m as f64 / delta;
        let y_bar = y.iter().sum::<f64>() / n as f64;
        let weighted = (n as f64 * y_bar + n0 * anc.mu) / (n as f64 + n0);
        ensure!(
            (post.mu_hat - weighted).abs() <= 1e-12,
            "mu_hat {} vs {weighted}",
            post.mu_hat
        );
    }
    within(start.elapsed(), 10)?;
    Ok(format!("worst relative error {worst:.1e}, {:.1?}", start.elapsed()))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Check {
    let anc = LogStats {
        mu: 11.5,
        sigma2: 0.09,
        m: 50,
        provenance: Provenance::Empirical,
    };
    let params = SmoothingParams::new(5.0, 0.32, 20).unwrap();
    let post = posterior(&[11.0, 11.2], &anc, &params).map_err(|e| e.to_string())?;
    ensure!((post.mu_hat - 11.4333).abs() <= 1e-4, "mu_hat {}", post.mu_hat);
    ensure!((post.tau2_hat - 0.1017).abs() <= 1e-3, "tau2_hat {}", post.tau2_hat);
    ensure!(
        (post.sigma2_hat - 0.1102).abs() <= 1e-3,
        "sigma2_hat {}",
        post.sigma2_hat
    );
    let p = smoothed_percentiles(&post);
    for (got, want, name) in [
        (p.p10, 60_340.0, "p10"),
        (p.median, 92_350.0, "median"),
        (p.p90, 141_330.0, "p90"),
    ] {
        ensure!((got / want - 1.0).abs() <= 1e-3, "{name} {got} vs {want}");
    }
    Ok(format!(
        "mu_hat {:.4}, tau2 {:.4}, sigma2 {:.4}, percentiles {:.0}/{:.0}/{:.0}",
        post.mu_hat, post.tau2_hat, post.sigma2_hat, p.p10, p.median, p.p90
    ))
}

// ---------------------------------------------------------------- 3-5

fn perturbation_cohorts() -> Vec<Vec<f64>> {
    let spec = SyntheticSpec {
        roots: 300,
        regions: 10,
        log_median_range: (40_000f64.ln(), 200_000f64.ln()),
        log_sd_range: (0.15, 0.35),
        cohort_size: (40, 150),
        seed: 3,
        ..SyntheticSpec::default()
    };
    generate(&spec)
        .unwrap()
        .leaf_values(CompensationType::BaseSalary)
        .into_values()
        .collect()
}

fn study(cohorts: &[Vec<f64>], mode: PerturbationMode) -> Vec<PerturbationRow> {
    perturbation_study(cohorts, mode, &DEFAULT_FRACTIONS, &WhiskerParams::default(), 17)
}

fn criterion_3(cohorts: &[Vec<f64>]) -> Check {
    let start = Instant::now();
    let rows = study(cohorts, PerturbationMode::TwoMillion);
    within(start.elapsed(), 30)?;
    for r in &rows {
        ensure!(r.cohorts >= 200, "only {} cohorts", r.cohorts);
        if r.fraction <= 0.25 + 1e-9 {
            ensure!(
                r.added_removed_pct >= 99.0,
                "{:.0}%: {:.2}% of added removed",
                r.fraction * 100.0,
                r.added_removed_pct
            );
            ensure!(
                r.original_removed_pct <= 1.0,
                "{:.0}%: {:.2}% of original removed",
                r.fraction * 100.0,
                r.original_removed_pct
            );
            for d in [r.p10_change_pct, r.median_change_pct, r.p90_change_pct] {
                ensure!(d.abs() <= 1.0, "{:.0}%: quantile moved {d:.2}%", r.fraction * 100.0);
            }
        }
    }
    let last = rows
        .iter()
        .find(|r| (r.fraction - 0.35).abs() < 1e-9)
        .ok_or("no 35% row")?;
    ensure!(
        last.added_removed_pct == 0.0,
        "35%: {:.2}% of added removed",
        last.added_removed_pct
    );
    ensure!(
        last.p90_change_pct >= 900.0,
        "35%: p90 moved only {:.0}%",
        last.p90_change_pct
    );
    Ok(format!(
        "{} cohorts; 5-25% all removed; 35% none removed, p90 {:+.0}%",
        last.cohorts, last.p90_change_pct
    ))
}

fn criterion_4(cohorts: &[Vec<f64>]) -> Check {
    let rows = study(cohorts, PerturbationMode::UniformInRange);
    let mut worst: f64 = 0.0;
    for r in &rows {
        ensure!(
            r.original_removed_pct <= 1.0 && r.added_removed_pct <= 1.0,
            "{:.0}%: removals {:.2}/{:.2}%",
            r.fraction * 100.0,
            r.added_removed_pct,
            r.original_removed_pct
        );
        for d in [r.p10_change_pct, r.median_change_pct, r.p90_change_pct] {
            worst = worst.max(d.abs());
            ensure!(d.abs() <= 5.0, "{:.0}%: quantile moved {d:.2}%", r.fraction * 100.0);
        }
    }
    Ok(format!("largest quantile change {worst:.2}%"))
}

fn criterion_5(cohorts: &[Vec<f64>]) -> Check {
    let rows = study(cohorts, PerturbationMode::MinWage);
    for w in rows.windows(2) {
        ensure!(
            w[1].added_removed_pct <= w[0].added_removed_pct,
            "removed fraction rises at {:.0}%",
            w[1].fraction * 100.0
        );
        ensure!(
            w[1].p10_change_pct <= w[0].p10_change_pct,
            "p10 change rises at {:.0}%",
            w[1].fraction * 100.0
        );
    }
    Ok(format!(
        "added removed {:.1}% -> {:.1}%, p10 {:+.1}% -> {:+.1}%",
        rows[0].added_removed_pct,
        rows[rows.len() - 1].added_removed_pct,
        rows[0].p10_change_pct,
        rows[rows.len() - 1].p10_change_pct
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Check {
    let start = Instant::now();
    let spec = SyntheticSpec {
        roots: 80,
        regions: 8,
        refinements: vec![RefinementSpec {
            dimension: Dimension::Company,
            branching: 15,
            offset_sd: 0.1,
        }],
        cohort_size: (3, 19),
        seed: 6,
        ..SyntheticSpec::default()
    };
    let values = generate(&spec).unwrap().lattice_values(CompensationType::BaseSalary, 3);
    // tune on one split, measure coverage on another
    let split = make_split(&values, 0.1, 20, 61).map_err(|e| e.to_string())?;
    let tuned =
        grid_search(&split, &GridSpec::default(), SegmentFilter::All, &NoRootPrior).map_err(|e| e.to_string())?;
    let params = SmoothingParams::new(tuned.delta_star, tuned.eta_star, 20).unwrap();
    let report = coverage_test(
        &values,
        CoverageParams::default(),
        0.1,
        &SmoothingConfig::uniform(params),
        &NoRootPrior,
        62,
    )
    .map_err(|e| e.to_string())?;
    within(start.elapsed(), 60)?;
    let all = report.overall();
    let tiny = report.summary(3..=4);
    ensure!(
        (0.75..=0.92).contains(&all.smoothed.covered),
        "smoothed coverage {:.3} outside [0.75, 0.92]",
        all.smoothed.covered
    );
    let gap = all.smoothed.covered - all.empirical.covered;
    ensure!(gap >= 0.15, "overall gap {gap:.3}");
    let tiny_gap = tiny.smoothed.covered - tiny.empirical.covered;
    ensure!(tiny_gap >= 0.25, "size 3-4 gap {tiny_gap:.3}");
    Ok(format!(
        "tuned ({}, {}); {} cohorts: smoothed {:.3} vs empirical {:.3}; sizes 3-4 ({}): {:.3} vs {:.3}",
        tuned.delta_star,
        tuned.eta_star,
        all.cohorts,
        all.smoothed.covered,
        all.empirical.covered,
        tiny.cohorts,
        tiny.smoothed.covered,
        tiny.empirical.covered
    ))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Check {
    let spec = SyntheticSpec {
        roots: 200,
        regions: 6,
        log_sd_range: (0.2, 0.3),
        leaf_sd_scale: (0.5, 1.5),
        refinements: vec![RefinementSpec {
            dimension: Dimension::Company,
            branching: 20,
            offset_sd: 0.05,
        }],
        cohort_size: (8, 19),
        seed: 1,
        ..SyntheticSpec::default()
    };
    let values = generate(&spec).unwrap().lattice_values(CompensationType::BaseSalary, 3);
    let grid = GridSpec::default();
    let max_delta = grid.max_delta();
    let min_delta = grid.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut optima = Vec::new();
    for seed in [1, 2] {
        let split = make_split(&values, 0.3, 20, seed).map_err(|e| e.to_string())?;
        let r = grid_search(&split, &grid, SegmentFilter::All, &NoRootPrior).map_err(|e| e.to_string())?;
        let at_max = r
            .table
            .iter()
            .filter(|row| row.delta == max_delta)
            .map(|row| row.ll)
            .fold(f64::NEG_INFINITY, f64::max);
        ensure!(
            r.delta_star > min_delta && r.delta_star < max_delta,
            "seed {seed}: argmax delta {} on the grid boundary",
            r.delta_star
        );
        ensure!(
            r.ll_star > at_max,
            "seed {seed}: LL* {} not above LL at delta={max_delta} ({at_max})",
            r.ll_star
        );
        optima.push((r.delta_star, r.eta_star, r.ll_star, at_max));
    }
    ensure!(
        optima[0].0 == optima[1].0 && optima[0].1 == optima[1].1,
        "argmax moved between seeds: {:?} vs {:?}",
        (optima[0].0, optima[0].1),
        (optima[1].0, optima[1].1)
    );
    Ok(format!(
        "argmax ({}, {}) for both seeds; LL* {:.1} / {:.1} vs {:.1} / {:.1} at delta={max_delta}",
        optima[0].0, optima[0].1, optima[0].2, optima[1].2, optima[0].3, optima[1].3
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for p in [1usize, 2, 5, 10, 25, 50, 100, 200] {
        for lambda in [0.0, 0.5] {
            let rows = 2 * p + 10;
            let design: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..p).map(|_| std.sample(&mut rng)).collect())
                .collect();
            let response: Vec<f64> = (0..rows).map(|_| std.sample(&mut rng)).collect();
            let beta = ridge_solve(&design, &response, lambda).map_err(|e| e.to_string())?;

            let x = nalgebra::DMatrix::from_fn(rows, p, |i, j| design[i][j]);
            let y = nalgebra::DVector::from_column_slice(&response);
            let a = x.transpose() * &x + nalgebra::DMatrix::identity(p, p) * lambda;
            let b = x.transpose() * y;
            let reference = a.lu().solve(&b).ok_or("reference system singular")?;
            let scale = reference.amax().max(1.0);
            let err = beta
                .iter()
                .zip(reference.iter())
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)
                / scale;
            worst = worst.max(err);
            ensure!(err <= 1e-8, "p={p}, lambda={lambda}: max deviation {err:.2e}");
        }
    }

    // additive title and region effects, noisy rows
    let title_eff: Vec<f64> = (0..15).map(|_| 0.3 * std.sample(&mut rng)).collect();
    let region_eff: Vec<f64> = (0..12).map(|_| 0.2 * std.sample(&mut rng)).collect();
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (t, te) in title_eff.iter().enumerate() {
        for (r, re) in region_eff.iter().enumerate() {
            let key = CohortKey::root(format!("t{t:02}"), "US", format!("r{r:02}"));
            let mean = 11.0 + te + re + 0.05 * std.sample(&mut rng);
            let n = rng.random_range(20..40);
            for i in 0..n {
                let row = (key.clone(), mean + 0.35 * std.sample(&mut rng));
                if i % 10 < 7 {
                    train.push(row);
                } else {
                    held.push(row);
                }
            }
        }
    }
    let dict = FeatureDictionary::from_roots(train.iter().map(|(k, _)| k), None);
    let model = fit_ridge(&train, dict, 1.0).map_err(|e| e.to_string())?;
    let eval = evaluate_ridge(&model, &held).map_err(|e| e.to_string())?;
    ensure!(
        eval.r2_cohort > eval.r2_row,
        "r2_cohort {} <= r2_row {}",
        eval.r2_cohort,
        eval.r2_row
    );
    Ok(format!(
        "worst deviation {worst:.1e} up to p=200; r2_row {:.3} < r2_cohort {:.3}",
        eval.r2_row, eval.r2_cohort
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Check {
    let values = [40_000.0, 50_000.0, 60_000.0, 70_000.0, 200_000.0];
    let limits = whisker_limits(&values, &WhiskerParams::default()).map_err(|e| e.to_string())?;
    ensure!(
        limits.lower == 20_000.0 && limits.upper == 110_000.0,
        "limits ({}, {})",
        limits.lower,
        limits.upper
    );
    let key = CohortKey::root("t", "US", "r");
    let cohort = Cohort {
        key,
        entries: values
            .iter()
            .enumerate()
            .map(|(i, v)| CompensationEntry::new(format!("e{i}"), *v))
            .collect(),
    };
    let (kept, report) = stage3_box_whisker(&cohort, &WhiskerParams::default(), 3);
    let kept = kept.ok_or("cohort dropped")?;
    let base = kept.values(CompensationType::BaseSalary);
    ensure!(base == values[..4], "kept {base:?}");
    ensure!(report.entries_dropped == 1, "dropped {}", report.entries_dropped);
    Ok("limits (20000, 110000), only the 200k entry removed".into())
}

// ---------------------------------------------------------------- 10-11

fn fixture_store() -> Result<(InsightStore, Config), String> {
    let config =
        Config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json")).map_err(|e| e.to_string())?;
    let (subs, _) = cohort_insights::cohort::read_submissions(config.paths.submissions.as_ref().unwrap())
        .map_err(|e| e.to_string())?;
    let overrides = OverrideSet::read(config.paths.overrides.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let related = RelatedMaps::read(config.paths.related_maps.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let pipeline = config
        .pipeline_config(config.external_limits().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    Ok((build(subs, &overrides, Some(&related), &pipeline).store, config))
}

fn criterion_10() -> Check {
    let (a, _) = fixture_store()?;
    let (b, _) = fixture_store()?;
    let bytes = a.to_ndjson();
    ensure!(bytes == b.to_ndjson(), "two builds differ");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (p1, p2) = (dir.path().join("a.ndjson"), dir.path().join("b.ndjson"));
    a.write(&p1).map_err(|e| e.to_string())?;
    let back = InsightStore::read(&p1).map_err(|e| e.to_string())?;
    back.write(&p2).map_err(|e| e.to_string())?;
    let (f1, f2) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    ensure!(f1 == f2 && f1 == bytes.as_bytes(), "round trip not byte-identical");
    ensure!(back == a, "round trip changed the store");
    Ok(format!("{} cohorts, build id {}..", a.len(), &a.build_id[..12]))
}

fn slack_submissions() -> Vec<RawSubmission> {
    let root = CohortKey::root("software engineer", "US", "sf bay area");
    let mut out = Vec::new();
    for (c, company) in ["google", "facebook", "linkedin"].iter().enumerate() {
        let key = root
            .clone()
            .with(Dimension::Industry, "internet")
            .with(Dimension::Company, *company);
        for i in 0..20 {
            let base = 150_000.0 + 10_000.0 * c as f64 + 1_500.0 * i as f64;
            out.push(RawSubmission::new(
                &key,
                CompensationEntry::new(format!("{company}-{i}"), base),
            ));
        }
    }
    out
}

fn referential_integrity(store: &InsightStore) -> Result<usize, String> {
    let mut checked = 0;
    let exact = |key: &CohortKey| {
        find_criteria(
            store,
            &CriteriaQuery {
                key: key.clone(),
                allow_generalization: false,
                comp_type: None,
            },
            &DEFAULT_DROP_ORDER,
        )
    };
    for (root, facets) in &store.lists.facets {
        ensure!(root.is_root(), "facets keyed by non-root {root}");
        for (dim, values) in facets {
            for v in values {
                let key = root.clone().with(*dim, v.clone());
                ensure!(exact(&key).status == Status::Found, "facet {key} does not resolve");
                checked += 1;
            }
        }
    }
    for (root, tops) in &store.lists.top {
        for (dim, keys) in tops {
            let medians: Vec<f64> = keys
                .iter()
                .map(|k| store.get_type(k, CompensationType::BaseSalary).map(|i| i.median))
                .collect::<Option<_>>()
                .ok_or(format!("top list of {root} names a key without a base insight"))?;
            ensure!(
                medians.windows(2).all(|w| w[0] >= w[1]),
                "top list of {root}/{dim} not descending"
            );
            for k in keys {
                ensure!(
                    k.to_root() == *root && k.level() == 1 && k.has(*dim),
                    "top entry {k} not a {dim} child of {root}"
                );
                ensure!(exact(k).status == Status::Found, "top entry {k} does not resolve");
                checked += 1;
            }
        }
    }
    for (root, related) in &store.lists.related {
        for k in related {
            ensure!(k.is_root() && k != root, "related entry {k} of {root}");
            ensure!(exact(k).status == Status::Found, "related entry {k} does not resolve");
            checked += 1;
        }
    }
    Ok(checked)
}

fn mixed_queries(store: &InsightStore) -> Vec<InsightQuery> {
    let keys: Vec<&CohortKey> = store.insights.keys().collect();
    let roots: Vec<&CohortKey> = keys.iter().copied().filter(|k| k.is_root()).collect();
    let absent = CohortKey::root("no such title", "US", "nowhere");
    (0..1000)
        .map(|i| {
            let key = keys[(i * 7) % keys.len()].clone();
            let root = roots[(i * 3) % roots.len()].clone();
            match i % 5 {
                0 => InsightQuery::Criteria(CriteriaQuery {
                    key,
                    allow_generalization: true,
                    comp_type: None,
                }),
                1 => InsightQuery::Criteria(CriteriaQuery {
                    key: key.with(Dimension::Degree, "phd"),
                    allow_generalization: i % 2 == 0,
                    comp_type: Some(CompensationType::BaseSalary),
                }),
                2 => InsightQuery::Facets(RootQuery {
                    key: if i % 50 == 2 { absent.clone() } else { root },
                }),
                3 => InsightQuery::RelatedInsights(RootQuery { key: root }),
                _ => InsightQuery::TopInsights(TopQuery {
                    key: root,
                    dimension: if i % 2 == 0 {
                        Dimension::Company
                    } else {
                        Dimension::Industry
                    },
                }),
            }
        })
        .collect()
}

fn request(q: &InsightQuery) -> Request<Body> {
    let (path, body) = match q {
        InsightQuery::Criteria(c) => ("/insights/criteria", serde_json::to_vec(c)),
        InsightQuery::Facets(r) => ("/insights/facets", serde_json::to_vec(r)),
        InsightQuery::RelatedInsights(r) => ("/insights/related", serde_json::to_vec(r)),
        InsightQuery::TopInsights(t) => ("/insights/top", serde_json::to_vec(t)),
    };
    Request::post(path)
        .header("content-type", "application/json")
        .body(Body::from(body.unwrap()))
        .unwrap()
}

fn criterion_11() -> Check {
    // generalization chain on the documented example
    let root = CohortKey::root("software engineer", "US", "sf bay area");
    let industry = root.clone().with(Dimension::Industry, "internet");
    let full = industry.clone().with(Dimension::Company, "slack technologies");
    let chain: Vec<CohortKey> = generalization_chain(&full, &DEFAULT_DROP_ORDER)
        .into_iter()
        .map(|c| c.0)
        .collect();
    ensure!(
        chain == [full.clone(), industry.clone(), root.clone()],
        "chain {chain:?}"
    );

    let config = cohort_insights::pipeline::PipelineConfig::default();
    let store = build(slack_submissions(), &OverrideSet::default(), None, &config).store;
    let q = CriteriaQuery {
        key: full.clone(),
        allow_generalization: true,
        comp_type: None,
    };
    let r = find_criteria(&store, &q, &DEFAULT_DROP_ORDER);
    ensure!(
        r.status == Status::Generalized
            && r.served_key.as_ref() == Some(&industry)
            && r.generalization_steps == [Dimension::Company],
        "first probe: {:?} {:?} {:?}",
        r.status,
        r.served_key,
        r.generalization_steps
    );
    let deletions = store
        .get(&industry)
        .unwrap_or_default()
        .iter()
        .map(|i| Deletion {
            key: industry.clone(),
            comp_type: i.comp_type,
        })
        .collect();
    let without_industry = build(
        slack_submissions(),
        &OverrideSet {
            deletions,
            additions: Vec::new(),
        },
        None,
        &config,
    )
    .store;
    let r = find_criteria(&without_industry, &q, &DEFAULT_DROP_ORDER);
    ensure!(
        r.served_key.as_ref() == Some(&root) && r.generalization_steps == [Dimension::Company, Dimension::Industry],
        "second probe: {:?} {:?}",
        r.served_key,
        r.generalization_steps
    );

    // referential integrity over the fixture store
    let (fixture, cfg) = fixture_store()?;
    let links = referential_integrity(&fixture)?;

    // concurrent HTTP answers equal sequential evaluation
    let queries = mixed_queries(&fixture);
    let sequential: Vec<InsightResponse> = queries
        .iter()
        .map(|q| execute(&fixture, q, &cfg.service.drop_order))
        .collect();
    let state = Arc::new(ServiceState::new(fixture, cfg.service.drop_order.clone(), None));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(8)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    let concurrent: Vec<Result<InsightResponse, String>> = runtime.block_on(async {
        let handles: Vec<_> = queries
            .iter()
            .map(|q| {
                let app = router(state.clone());
                let req = request(q);
                tokio::spawn(async move {
                    let resp = app.oneshot(req).await.map_err(|e| e.to_string())?;
                    if resp.status() != StatusCode::OK {
                        return Err(format!("status {}", resp.status()));
                    }
                    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX)
                        .await
                        .map_err(|e| e.to_string())?;
                    serde_json::from_slice::<InsightResponse>(&bytes).map_err(|e| e.to_string())
                })
            })
            .collect();
        let mut out = Vec::with_capacity(handles.len());
        for h in handles {
            out.push(h.await.unwrap_or_else(|e| Err(e.to_string())));
        }
        out
    });
    let mut statuses = BTreeMap::new();
    for (i, (seq, conc)) in sequential.iter().zip(&concurrent).enumerate() {
        let conc = conc.as_ref().map_err(|e| format!("query {i}: {e}"))?;
        ensure!(
            seq == conc,
            "query {i} differs between sequential and concurrent execution"
        );
        *statuses.entry(format!("{:?}", seq.status)).or_insert(0) += 1;
    }
    Ok(format!(
        "chain ok; {links} list links resolve; 1000 concurrent answers match ({statuses:?})"
    ))
}

// ---------------------------------------------------------------- 12

fn criterion_12() -> Check {
    let (mu, sigma) = (85_000f64.ln(), 0.3);
    let dist = Normal::new(mu, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let logs: Vec<f64> = (0..20_000).map(|_| dist.sample(&mut rng)).collect();
    let prior = LogStats {
        mu: mu + 0.3,
        sigma2: 0.2,
        m: 20,
        provenance: Provenance::RegressionPrior,
    };
    let post = posterior(&logs, &prior, &SmoothingParams::default()).map_err(|e| e.to_string())?;
    let p = smoothed_percentiles(&post);
    // standard normal 0.9 quantile
    let z = 1.281_551_565_544_600_4;
    let mut worst = 0.0f64;
    for (got, want) in [
        (p.p10, (mu - z * sigma).exp()),
        (p.median, mu.exp()),
        (p.p90, (mu + z * sigma).exp()),
    ] {
        let rel = (got / want - 1.0).abs();
        worst = worst.max(rel);
        ensure!(rel <= 0.02, "{got} vs true {want}");
    }
    Ok(format!("largest relative error {:.3}%", 100.0 * worst))
}

fn main() {
    let cohorts = perturbation_cohorts();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("posterior algebra vs quadrature", Box::new(criterion_1)),
        ("worked posterior example", Box::new(criterion_2)),
        ("perturbation, two-million", Box::new(|| criterion_3(&cohorts))),
        ("perturbation, uniform-in-range", Box::new(|| criterion_4(&cohorts))),
        ("perturbation, min-wage", Box::new(|| criterion_5(&cohorts))),
        ("held-out coverage", Box::new(criterion_6)),
        ("tuning sanity", Box::new(criterion_7)),
        ("ridge oracle", Box::new(criterion_8)),
        ("box-whisker hand oracle", Box::new(criterion_9)),
        ("pipeline determinism", Box::new(criterion_10)),
        ("service contract", Box::new(criterion_11)),
        ("large-n consistency", Box::new(criterion_12)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
