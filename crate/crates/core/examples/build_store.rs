//! Builds the insight store from the fixture config, writes it, reads it
//! back and diffs it against itself.

use std::path::Path;

use cohort_insights::cli::Config;
use cohort_insights::cohort::read_submissions;
use cohort_insights::pipeline::{build, diff_stores, InsightStore, OverrideSet, RelatedMaps};

fn main() -> cohort_insights::Result<()> {
    let config = Config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json"))?;
    let paths = &config.paths;
    let (subs, _) = read_submissions(paths.submissions.as_ref().unwrap())?;
    let overrides = OverrideSet::read(paths.overrides.as_ref().unwrap())?;
    let related = RelatedMaps::read(paths.related_maps.as_ref().unwrap())?;
    let pipeline = config.pipeline_config(config.external_limits()?)?;

    let out = build(subs, &overrides, Some(&related), &pipeline);
    println!("{}", serde_json::to_string_pretty(&out.summary).unwrap());

    let dir = std::env::temp_dir().join("cohort-insights-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("store.ndjson");
    out.store.write(&path)?;
    let back = InsightStore::read(&path)?;
    let diff = diff_stores(&back, &out.store, &config.diff);
    println!("wrote {}; self-diff flagged: {}", path.display(), diff.flagged());
    Ok(())
}
