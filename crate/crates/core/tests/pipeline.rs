use cohort_insights::cohort::{CompensationType, Dimension};
use cohort_insights::eval::{generate, RefinementSpec, SyntheticSpec};
use cohort_insights::pipeline::{build, InsightStore, OverrideSet, PipelineConfig};
use proptest::prelude::*;

fn spec(seed: u64, roots: usize, max_size: usize) -> SyntheticSpec {
    SyntheticSpec {
        roots,
        regions: 3,
        refinements: vec![RefinementSpec {
            dimension: Dimension::Company,
            branching: 3,
            offset_sd: 0.1,
        }],
        cohort_size: (1, max_size),
        bonus_probability: 0.4,
        seed,
        ..SyntheticSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn built_stores_are_consistent(seed in 0u64..10_000, roots in 1usize..8, max_size in 3usize..25) {
        let data = generate(&spec(seed, roots, max_size)).unwrap();
        let out = build(data.submissions, &OverrideSet::default(), None, &PipelineConfig::default());
        let store = out.store;
        let dropped = &out.outliers.stage("box_whisker").unwrap().cohorts_dropped;
        for (key, insights) in &store.insights {
            prop_assert!(!insights.is_empty());
            for i in insights {
                prop_assert_eq!(&i.key, key);
                prop_assert!(i.validate().is_ok());
                prop_assert!(i.p10 <= i.median && i.median <= i.p90);
                prop_assert_eq!(i.histogram.is_some(), !i.smoothed);
            }
            // a refined cohort's root is stored unless stage 3 dropped it
            let root = key.to_root();
            prop_assert!(store.get(&root).is_some() || dropped.contains(&root));
        }
        let text = store.to_ndjson();
        let back = InsightStore::from_ndjson(&text).unwrap();
        prop_assert_eq!(back.to_ndjson(), text);
        prop_assert_eq!(&back, &store);
    }

    #[test]
    fn small_cohorts_are_smoothed_when_an_ancestor_exists(seed in 0u64..10_000) {
        let data = generate(&spec(seed, 3, 10)).unwrap();
        let store = build(data.submissions, &OverrideSet::default(), None, &PipelineConfig::default()).store;
        // refined cohorts whose root survived stage 3 always have an ancestor
        for (key, _) in store.insights.iter().filter(|(k, _)| !k.is_root() && store.get(&k.to_root()).is_some()) {
            let i = store.get_type(key, CompensationType::BaseSalary).unwrap();
            if i.count < 20 {
                prop_assert!(i.smoothed, "{} n={} not smoothed", key, i.count);
            }
        }
    }
}

#[test]
fn tampered_store_is_rejected() {
    let data = generate(&spec(1, 2, 10)).unwrap();
    let store = build(
        data.submissions,
        &OverrideSet::default(),
        None,
        &PipelineConfig::default(),
    )
    .store;
    let text = store.to_ndjson().replacen("\"median\":", "\"median\":1", 1);
    assert!(InsightStore::from_ndjson(&text).is_err());
}
