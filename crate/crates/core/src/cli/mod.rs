//! Command-line entry point.
//!
//! Stage commands (`ingest`, `outliers`, `aggregate`, `smooth`) pass
//! artifacts through the configured work directory; `build` runs the whole
//! pipeline in one go. Exit status: 0 on success, 1 on invalid input or
//! configuration, 2 when a build or diff trips the sanity thresholds.

mod config;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{Config, EvalSection, Paths, ServiceSection, SmoothingSection, TuningSection};

use crate::cohort::{read_submissions, write_submissions, Cohort, CohortKey, CompensationType, RawSubmission};
use crate::error::{Error, Result};
use crate::eval::{coverage_test, generate, perturbation_study, qq_export, write_perturbation_csv, write_qq_csv};
use crate::outliers::{read_title_region_limits, run_outlier_pipeline, write_title_region_limits, TitleRegionLimits};
use crate::pipeline::{
    aggregate, build, diff_stores, root_training_values, smooth_insights, InsightStore, OverrideSet, RelatedMaps,
};
use crate::regression::RegressionPriors;
use crate::service::http::{serve, ServiceState};
use crate::smoothing::NoRootPrior;
use crate::tuning::{grid_search_segments, make_split, write_ll_table};

pub const INGESTED_SUBMISSIONS: &str = "submissions.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const EXTERNAL_LIMITS: &str = "external_limits.csv";
pub const COHORTS: &str = "cohorts.jsonl";
pub const OUTLIER_REPORT: &str = "outlier_report.json";
pub const AGGREGATED: &str = "aggregated.jsonl";
pub const SMOOTHED: &str = "insights.jsonl";
pub const PRIORS: &str = "priors.json";
pub const LL_TABLE: &str = "ll_table.csv";

#[derive(Debug, Parser)]
#[command(
    name = "cohort-insights",
    version,
    about = "Build and serve cohort compensation insights"
)]
pub struct Cli {
    /// JSON config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path: the work directory for ingest/outliers/aggregate/smooth,
    /// a file for the other commands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse submissions and external limit files into the work directory.
    Ingest,
    /// Run the three outlier stages and materialize cleaned cohorts.
    Outliers,
    /// Empirical insights for cohorts with at least h entries.
    Aggregate,
    /// Train root priors and smooth every cohort.
    Smooth,
    /// Held-out likelihood grid search over (delta, eta).
    Tune,
    /// Full pipeline to an insight store, diffed against the previous store.
    Build,
    /// Compare two stores; defaults to the configured store and previous store.
    Diff { new: Option<PathBuf>, old: Option<PathBuf> },
    /// Serve a store over HTTP.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Evaluation protocols on synthetic data.
    Eval {
        #[command(subcommand)]
        which: EvalCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Spurious-entry perturbation study, one CSV row per mode and fraction.
    Perturb,
    /// Held-out quantile coverage, smoothed vs empirical.
    Coverage,
    /// Normal Q-Q points in raw and log scale.
    Qq {
        /// Cohort from the configured submissions; the largest synthetic cohort otherwise.
        #[arg(long)]
        key: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Finished, but the sanity diff raised flags.
    Flagged,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Flagged => 2,
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let stage = matches!(
        cli.command,
        Command::Ingest | Command::Outliers | Command::Aggregate | Command::Smooth
    );
    if stage {
        if let Some(dir) = &cli.out {
            config.paths.work_dir = Some(dir.clone());
        }
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Ingest => ingest(&config),
        Command::Outliers => outliers(&config),
        Command::Aggregate => aggregate_cmd(&config),
        Command::Smooth => smooth(&config),
        Command::Tune => tune(&config, out),
        Command::Build => build_cmd(&config, out),
        Command::Diff { new, old } => diff(&config, new, old),
        Command::Serve { bind, store } => serve_cmd(&config, bind, store),
        Command::Eval { which } => match which {
            EvalCommand::Perturb => eval_perturb(&config, out),
            EvalCommand::Coverage => eval_coverage(&config, out),
            EvalCommand::Qq { key } => eval_qq(&config, out, key),
        },
    }
}

fn required<'a>(path: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidParameter(format!("paths.{name} is not configured")))
}

fn out_dir(config: &Config) -> Result<PathBuf> {
    let dir = config.work_dir();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(())
}

/// Writes to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            create_parent(p)?;
            std::fs::write(p, bytes)?;
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(None, text.as_bytes())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(Some(path), text.as_bytes())
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    emit(Some(path), text.as_bytes())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::input(path.display().to_string(), format!("line {}: {e}", i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// Ingested submissions from the work directory when present, otherwise the
/// configured raw file.
fn load_submissions(config: &Config) -> Result<Vec<RawSubmission>> {
    let staged = config.work_dir().join(INGESTED_SUBMISSIONS);
    let path = if staged.exists() {
        staged
    } else {
        required(&config.paths.submissions, "submissions")?.to_path_buf()
    };
    let (subs, rejected) = read_submissions(&path)?;
    if !rejected.is_empty() {
        log::warn!("{}: {} malformed records skipped", path.display(), rejected.len());
    }
    Ok(subs)
}

fn load_external(config: &Config) -> Result<Option<TitleRegionLimits>> {
    let staged = config.work_dir().join(EXTERNAL_LIMITS);
    if config.paths.external_limits.is_none() && staged.exists() {
        return read_title_region_limits(&staged).map(Some);
    }
    config.external_limits()
}

fn load_cohorts(config: &Config) -> Result<BTreeMap<CohortKey, Cohort>> {
    let path = config.work_dir().join(COHORTS);
    if path.exists() {
        let cohorts: Vec<Cohort> = read_jsonl(&path)?;
        return Ok(cohorts.into_iter().map(|c| (c.key.clone(), c)).collect());
    }
    log::info!("{} not found, running outlier detection", path.display());
    let clean = run_outlier_pipeline(
        load_submissions(config)?,
        &config.outlier_config(load_external(config)?)?,
    );
    Ok(clean.cohorts)
}

#[derive(Serialize)]
struct IngestReport {
    accepted: usize,
    rejected: Vec<crate::cohort::RecordDiagnostic>,
    external_limits: Option<usize>,
}

fn ingest(config: &Config) -> Result<Outcome> {
    let dir = out_dir(config)?;
    let input = required(&config.paths.submissions, "submissions")?;
    let (subs, rejected) = read_submissions(input)?;
    let mut text = Vec::new();
    write_submissions(&mut text, &subs)?;
    emit(Some(&dir.join(INGESTED_SUBMISSIONS)), &text)?;
    let external = config.external_limits()?;
    if let Some(limits) = &external {
        write_title_region_limits(&dir.join(EXTERNAL_LIMITS), limits)?;
    }
    let report = IngestReport {
        accepted: subs.len(),
        rejected,
        external_limits: external.as_ref().map(TitleRegionLimits::len),
    };
    write_json(&dir.join(INGEST_REPORT), &report)?;
    log::info!(
        "ingested {} submissions, rejected {}",
        report.accepted,
        report.rejected.len()
    );
    Ok(Outcome::Success)
}

fn outliers(config: &Config) -> Result<Outcome> {
    let dir = out_dir(config)?;
    let clean = run_outlier_pipeline(
        load_submissions(config)?,
        &config.outlier_config(load_external(config)?)?,
    );
    write_jsonl(&dir.join(COHORTS), clean.cohorts.values())?;
    write_json(&dir.join(OUTLIER_REPORT), &clean.report)?;
    log::info!("{} cohorts after outlier detection", clean.cohorts.len());
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct AggregateSummary {
    empirical_insights: usize,
    pending_smoothing: usize,
}

fn aggregate_cmd(config: &Config) -> Result<Outcome> {
    let dir = out_dir(config)?;
    let cohorts = load_cohorts(config)?;
    let agg = aggregate(&cohorts, config.h, config.k_min, config.histogram_buckets);
    write_jsonl(&dir.join(AGGREGATED), agg.empirical.values())?;
    print_json(&AggregateSummary {
        empirical_insights: agg.empirical.len(),
        pending_smoothing: agg.pending_smoothing(config.h),
    })?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct SmoothSummary {
    insights: usize,
    smoothed: usize,
    warnings: Vec<String>,
}

fn smooth(config: &Config) -> Result<Outcome> {
    let dir = out_dir(config)?;
    let cohorts = load_cohorts(config)?;
    let agg = aggregate(&cohorts, config.h, config.k_min, config.histogram_buckets);
    let (priors, mut warnings) =
        RegressionPriors::train(&root_training_values(&agg), &config.ridge, config.h, config.seed);
    let (draft, _, w) = smooth_insights(&agg, &priors, &config.smoothing_config()?, config.histogram_buckets);
    warnings.extend(w);
    let insights: Vec<_> = draft.values().flat_map(|m| m.values()).collect();
    write_jsonl(&dir.join(SMOOTHED), insights.iter().copied())?;
    write_json(&dir.join(PRIORS), &priors)?;
    print_json(&SmoothSummary {
        insights: insights.len(),
        smoothed: insights.iter().filter(|i| i.smoothed).count(),
        warnings,
    })?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct TuneRow {
    segment: String,
    delta: f64,
    eta: f64,
    ll: f64,
    scored: usize,
}

fn tune(config: &Config, out: Option<&Path>) -> Result<Outcome> {
    let ty = config.tuning.comp_type;
    let values: BTreeMap<CohortKey, Vec<f64>> = load_cohorts(config)?
        .into_iter()
        .map(|(k, c)| (k, c.values(ty)))
        .filter(|(_, v)| v.len() >= config.k_min)
        .collect();
    let split = make_split(&values, config.tuning.holdout_fraction, config.h, config.seed)?;
    // Root priors are trained on the training side only.
    let roots: BTreeMap<(CohortKey, CompensationType), Vec<f64>> = split
        .train
        .iter()
        .filter(|(k, _)| k.is_root())
        .map(|(k, v)| ((k.clone(), ty), v.clone()))
        .collect();
    let (priors, _) = RegressionPriors::train(&roots, &config.ridge, config.h, config.seed);
    let results = grid_search_segments(
        &split,
        &config.grid()?,
        &config.segment_filters()?,
        &priors.for_type(ty),
    )?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.work_dir().join(LL_TABLE));
    create_parent(&path)?;
    write_ll_table(std::fs::File::create(&path)?, &results)?;
    let best: Vec<TuneRow> = results
        .iter()
        .map(|r| TuneRow {
            segment: r.segment.to_string(),
            delta: r.delta_star,
            eta: r.eta_star,
            ll: r.ll_star,
            scored: r.scored,
        })
        .collect();
    print_json(&best)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct BuildReport<'a> {
    summary: &'a crate::pipeline::BuildSummary,
    diff: Option<crate::pipeline::DiffReport>,
}

fn build_cmd(config: &Config, out: Option<&Path>) -> Result<Outcome> {
    let store_path = match out {
        Some(p) => p.to_path_buf(),
        None => required(&config.paths.store, "store")?.to_path_buf(),
    };
    let (subs, rejected) = read_submissions(required(&config.paths.submissions, "submissions")?)?;
    if !rejected.is_empty() {
        log::warn!("{} malformed submission records skipped", rejected.len());
    }
    let overrides = match &config.paths.overrides {
        Some(p) => OverrideSet::read(p)?,
        None => OverrideSet::default(),
    };
    let related = config
        .paths
        .related_maps
        .as_deref()
        .map(RelatedMaps::read)
        .transpose()?;
    let output = build(
        subs,
        &overrides,
        related.as_ref(),
        &config.pipeline_config(config.external_limits()?)?,
    );
    create_parent(&store_path)?;
    output.store.write(&store_path)?;
    log::info!("wrote {} cohorts to {}", output.store.len(), store_path.display());

    let diff = match &config.paths.previous_store {
        Some(p) if p.exists() => Some(diff_stores(&output.store, &InsightStore::read(p)?, &config.diff)),
        _ => None,
    };
    let flagged = diff.as_ref().is_some_and(|d| d.flagged());
    print_json(&BuildReport {
        summary: &output.summary,
        diff,
    })?;
    Ok(if flagged { Outcome::Flagged } else { Outcome::Success })
}

fn diff(config: &Config, new: Option<PathBuf>, old: Option<PathBuf>) -> Result<Outcome> {
    let new = match new {
        Some(p) => p,
        None => required(&config.paths.store, "store")?.to_path_buf(),
    };
    let old = match old {
        Some(p) => p,
        None => required(&config.paths.previous_store, "previous_store")?.to_path_buf(),
    };
    let report = diff_stores(&InsightStore::read(&new)?, &InsightStore::read(&old)?, &config.diff);
    print_json(&report)?;
    Ok(if report.flagged() {
        Outcome::Flagged
    } else {
        Outcome::Success
    })
}

fn serve_cmd(config: &Config, bind: Option<String>, store: Option<PathBuf>) -> Result<Outcome> {
    let path = match store {
        Some(p) => p,
        None => required(&config.paths.store, "store")?.to_path_buf(),
    };
    let store = InsightStore::read(&path)?;
    let state = Arc::new(ServiceState::new(
        store,
        config.service.drop_order.clone(),
        config.service.token.clone(),
    ));
    let addr = bind.unwrap_or_else(|| config.service.bind.clone());
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr).await?;
        log::info!("serving {} on {}", path.display(), listener.local_addr()?);
        serve(listener, state).await
    })?;
    Ok(Outcome::Success)
}

fn synthetic_values(config: &Config) -> Result<BTreeMap<CohortKey, Vec<f64>>> {
    let data = generate(&config.eval.synthetic)?;
    Ok(data.lattice_values(CompensationType::BaseSalary, config.k_min))
}

fn eval_perturb(config: &Config, out: Option<&Path>) -> Result<Outcome> {
    let cohorts: Vec<Vec<f64>> = synthetic_values(config)?.into_values().collect();
    let rows: Vec<_> = config
        .eval
        .modes
        .iter()
        .flat_map(|mode| perturbation_study(&cohorts, *mode, &config.eval.fractions, &config.whiskers, config.seed))
        .collect();
    let mut text = Vec::new();
    write_perturbation_csv(&mut text, &rows)?;
    emit(out, &text)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct CoverageOutput {
    overall: crate::eval::CoverageSummary,
    by_size: BTreeMap<usize, crate::eval::CoverageSummary>,
}

fn eval_coverage(config: &Config, out: Option<&Path>) -> Result<Outcome> {
    let report = coverage_test(
        &synthetic_values(config)?,
        config.eval.coverage,
        config.eval.holdout_fraction,
        &config.smoothing_config()?,
        &NoRootPrior,
        config.seed,
    )?;
    let sizes: std::collections::BTreeSet<usize> = report.per_cohort.iter().map(|c| c.n).collect();
    let output = CoverageOutput {
        overall: report.overall(),
        by_size: sizes.into_iter().map(|n| (n, report.summary(n..=n))).collect(),
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    emit(out, text.as_bytes())?;
    Ok(Outcome::Success)
}

fn eval_qq(config: &Config, out: Option<&Path>, key: Option<String>) -> Result<Outcome> {
    let values = match key {
        Some(k) => {
            let key: CohortKey = k.parse()?;
            let cohorts = load_cohorts(config)?;
            cohorts
                .get(&key)
                .map(|c| c.values(CompensationType::BaseSalary))
                .ok_or_else(|| Error::InvalidParameter(format!("no cohort {key}")))?
        }
        None => synthetic_values(config)?
            .into_values()
            .max_by_key(Vec::len)
            .ok_or_else(|| Error::InvalidParameter("synthetic data set is empty".into()))?,
    };
    let report = qq_export(&values, config.eval.qq_points)?;
    log::info!("Q-Q R² raw {:.4}, log {:.4}", report.r2_raw, report.r2_log);
    let mut text = Vec::new();
    write_qq_csv(&mut text, &report)?;
    emit(out, &text)?;
    Ok(Outcome::Success)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    run(cli)
}
