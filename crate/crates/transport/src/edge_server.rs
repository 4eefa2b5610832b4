//! The edge tier over HTTP. Query handling runs the blocking edge engine
//! (which calls the cloud) on the blocking pool.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::middleware;
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use prunesearch_core::analytics::{save_abstracts, Abstract};
use prunesearch_core::edge::{CloudBackend, EdgeEngine, SearchOutcome};
use serde::{Deserialize, Serialize};

use crate::server::{blocking, parse_json, request_id, ApiResult, MAX_BODY_BYTES};
use crate::wire::{QueryRequest, QueryResponse};

impl From<SearchOutcome> for QueryResponse {
    fn from(o: SearchOutcome) -> Self {
        Self {
            result: o.result,
            chosen: o.prune.chosen,
            terms: o.query.terms,
            expanded: o.query.expanded,
            hit_clusters: o.hit_clusters.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeHealth {
    pub status: String,
    pub clusters: usize,
    pub abstract_terms: usize,
    pub history: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaintenanceSummary {
    pub passes: usize,
    pub decisions: usize,
    pub abstract_terms: usize,
    pub non_converged: Vec<prunesearch_core::ClusterId>,
}

/// Edge engine plus where (if anywhere) its abstracts are saved whenever
/// maintenance swaps in a new snapshot.
pub struct EdgeApp<B> {
    engine: EdgeEngine<B>,
    abstracts_path: Option<PathBuf>,
    saved: Mutex<Option<Arc<Vec<Abstract>>>>,
}

impl<B: CloudBackend> EdgeApp<B> {
    pub fn new(engine: EdgeEngine<B>, abstracts_path: Option<PathBuf>) -> Self {
        let saved = Mutex::new(Some(engine.abstracts()));
        Self {
            engine,
            abstracts_path,
            saved,
        }
    }

    pub fn engine(&self) -> &EdgeEngine<B> {
        &self.engine
    }

    fn persist_if_changed(&self) -> prunesearch_core::Result<()> {
        let Some(path) = &self.abstracts_path else {
            return Ok(());
        };
        let current = self.engine.abstracts();
        let mut saved = self.saved.lock();
        if saved.as_ref().is_some_and(|s| Arc::ptr_eq(s, &current)) {
            return Ok(());
        }
        save_abstracts(&current, path)?;
        *saved = Some(current);
        Ok(())
    }

    pub fn query(&self, req: &QueryRequest) -> prunesearch_core::Result<QueryResponse> {
        let outcome = self.engine.execute_search(&req.query, &req.session_id)?;
        self.persist_if_changed()?;
        Ok(outcome.into())
    }

    pub fn maintain(&self) -> prunesearch_core::Result<MaintenanceSummary> {
        let report = self.engine.maintain()?;
        self.persist_if_changed()?;
        Ok(MaintenanceSummary {
            passes: report.passes,
            decisions: report.decisions.len(),
            abstract_terms: report.abstracts.iter().map(Abstract::len).sum(),
            non_converged: report.non_converged,
        })
    }
}

pub fn edge_router<B: CloudBackend + 'static>(app: Arc<EdgeApp<B>>) -> Router {
    Router::new()
        .route("/v1/health", get(health::<B>))
        .route("/v1/query", post(query::<B>))
        .route("/v1/maintain", post(maintain::<B>))
        .route("/v1/abstracts", get(abstracts::<B>))
        .with_state(app)
        .layer(middleware::from_fn(request_id))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
}

async fn health<B: CloudBackend + 'static>(State(app): State<Arc<EdgeApp<B>>>) -> Json<EdgeHealth> {
    let abstracts = app.engine.abstracts();
    Json(EdgeHealth {
        status: "ok".into(),
        clusters: abstracts.len(),
        abstract_terms: abstracts.iter().map(Abstract::len).sum(),
        history: app.engine.history().len(),
    })
}

async fn query<B: CloudBackend + 'static>(
    State(app): State<Arc<EdgeApp<B>>>,
    body: Bytes,
) -> ApiResult<Json<QueryResponse>> {
    let req: QueryRequest = parse_json(&body)?;
    Ok(Json(blocking(move || app.query(&req)).await?))
}

async fn maintain<B: CloudBackend + 'static>(
    State(app): State<Arc<EdgeApp<B>>>,
) -> ApiResult<Json<MaintenanceSummary>> {
    Ok(Json(blocking(move || app.maintain()).await?))
}

async fn abstracts<B: CloudBackend + 'static>(
    State(app): State<Arc<EdgeApp<B>>>,
) -> Json<Vec<Abstract>> {
    Json(app.engine.abstracts().as_ref().clone())
}
