//! Queries a fixture-built store in process, then through the HTTP router.

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use cohort_insights::cli::Config;
use cohort_insights::cohort::{read_submissions, CohortKey, Dimension};
use cohort_insights::pipeline::{build, OverrideSet};
use cohort_insights::service::http::{router, ServiceState};
use cohort_insights::service::{find_criteria, CriteriaQuery, DEFAULT_DROP_ORDER};
use tower::ServiceExt;

#[tokio::main]
async fn main() -> cohort_insights::Result<()> {
    let config = Config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json"))?;
    let (subs, _) = read_submissions(config.paths.submissions.as_ref().unwrap())?;
    let store = build(subs, &OverrideSet::default(), None, &config.pipeline_config(None)?).store;

    // a company nobody submitted for: the answer generalizes
    let key = CohortKey::root("title-001", "US", "region-01").with(Dimension::Company, "unknown-co");
    let q = CriteriaQuery {
        key,
        allow_generalization: true,
        comp_type: None,
    };
    let answer = find_criteria(&store, &q, &DEFAULT_DROP_ORDER);
    println!("{}", serde_json::to_string_pretty(&answer).unwrap());

    let app = router(Arc::new(ServiceState::new(store, DEFAULT_DROP_ORDER.to_vec(), None)));
    let req = Request::post("/insights/facets")
        .header("content-type", "application/json")
        .body(Body::from(r#"{"key": "title-001/US/region-01"}"#))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    println!("{}", String::from_utf8_lossy(&body));
    Ok(())
}
