//! Runs the three outlier stages over the bundled fixture submissions and
//! prints what each stage removed.

use std::path::Path;

use cohort_insights::cohort::read_submissions;
use cohort_insights::outliers::{run_outlier_pipeline, OutlierConfig};

fn main() -> cohort_insights::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/submissions.jsonl");
    let (subs, rejected) = read_submissions(&path)?;
    println!("{} submissions read, {} lines rejected", subs.len(), rejected.len());

    let clean = run_outlier_pipeline(subs, &OutlierConfig::default());
    for stage in &clean.report.stages {
        println!(
            "{:<12} entries in {:>5}  dropped {:>4}  cohorts dropped {:>3}",
            stage.stage,
            stage.entries_in,
            stage.entries_dropped,
            stage.cohorts_dropped.len()
        );
    }
    println!("{} cohorts survive", clean.cohorts.len());
    Ok(())
}
