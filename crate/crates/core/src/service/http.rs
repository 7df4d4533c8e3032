use std::sync::{Arc, RwLock};

use axum::extract::{Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use super::{find_criteria, find_facets, find_related, find_top, CriteriaQuery, InsightResponse, RootQuery, TopQuery};
use crate::cohort::Dimension;
use crate::pipeline::InsightStore;

/// Shared service state. Handlers clone the current store snapshot, so a
/// swap never affects requests already in flight.
pub struct ServiceState {
    store: RwLock<Arc<InsightStore>>,
    drop_order: Vec<Dimension>,
    token: Option<String>,
}

impl ServiceState {
    pub fn new(store: InsightStore, drop_order: Vec<Dimension>, token: Option<String>) -> Self {
        ServiceState {
            store: RwLock::new(Arc::new(store)),
            drop_order,
            token,
        }
    }

    pub fn snapshot(&self) -> Arc<InsightStore> {
        self.store.read().expect("store lock").clone()
    }

    /// Replaces the served store atomically.
    pub fn swap(&self, store: InsightStore) {
        *self.store.write().expect("store lock") = Arc::new(store);
    }

    pub fn drop_order(&self) -> &[Dimension] {
        &self.drop_order
    }
}

#[derive(Debug, Serialize)]
struct StatusBody {
    build_id: String,
    format_version: u32,
    cohorts: usize,
}

async fn status(State(state): State<Arc<ServiceState>>) -> Json<StatusBody> {
    let store = state.snapshot();
    Json(StatusBody {
        build_id: store.build_id.clone(),
        format_version: store.format_version,
        cohorts: store.len(),
    })
}

async fn criteria(State(state): State<Arc<ServiceState>>, Json(q): Json<CriteriaQuery>) -> Json<InsightResponse> {
    Json(find_criteria(&state.snapshot(), &q, state.drop_order()))
}

async fn facets(State(state): State<Arc<ServiceState>>, Json(q): Json<RootQuery>) -> Json<InsightResponse> {
    Json(find_facets(&state.snapshot(), &q))
}

async fn related(State(state): State<Arc<ServiceState>>, Json(q): Json<RootQuery>) -> Json<InsightResponse> {
    Json(find_related(&state.snapshot(), &q))
}

async fn top(State(state): State<Arc<ServiceState>>, Json(q): Json<TopQuery>) -> Json<InsightResponse> {
    Json(find_top(&state.snapshot(), &q))
}

async fn require_token(State(state): State<Arc<ServiceState>>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return (StatusCode::UNAUTHORIZED, "missing or invalid bearer token").into_response();
        }
    }
    next.run(request).await
}

/// Routes: `POST /insights/{criteria,facets,related,top}` and `GET /status`.
/// With a token configured, the insight routes require
/// `Authorization: Bearer <token>`.
pub fn router(state: Arc<ServiceState>) -> Router {
    let insights = Router::new()
        .route("/insights/criteria", post(criteria))
        .route("/insights/facets", post(facets))
        .route("/insights/related", post(related))
        .route("/insights/top", post(top))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/status", get(status))
        .merge(insights)
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<ServiceState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
