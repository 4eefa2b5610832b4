//! The cloud tier over HTTP: upload, clustering, metadata and token search.

use std::sync::Arc;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{DefaultBodyLimit, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prunesearch_core::cloud::{
    CloudService, ClusterInfo, ClusterSummary, SearchResponse, UploadSummary,
};
use prunesearch_core::corpus::UploadBatch;
use serde_json::Value;

use crate::server::{blocking, parse_json, request_id, ApiError, ApiResult, MAX_BODY_BYTES};
use crate::wire::{
    ClusterRequest, Health, MessageKind, SearchRequest, WireMessage, REQUEST_ID_HEADER,
    WIRE_VERSION,
};
use crate::wirelog::{WireEntry, WireLog};

#[derive(Clone)]
struct CloudApp {
    service: Arc<CloudService>,
}

pub fn cloud_router(service: Arc<CloudService>, wire: Option<Arc<WireLog>>) -> Router {
    let app = CloudApp { service };
    let mut router = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/upload", post(upload))
        .route("/v1/cluster", post(cluster))
        .route("/v1/clusters", get(clusters))
        .route("/v1/search", post(search))
        .route("/v1/message", post(message))
        .with_state(app);
    if let Some(log) = wire {
        router = router.layer(middleware::from_fn_with_state(log, record_wire));
    }
    router
        .layer(middleware::from_fn(request_id))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
}

async fn record_wire(State(log): State<Arc<WireLog>>, req: Request, next: Next) -> Response {
    let (parts, body) = req.into_parts();
    let bytes = match to_bytes(body, MAX_BODY_BYTES).await {
        Ok(b) => b,
        Err(e) => {
            return ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, e.to_string()).into_response()
        }
    };
    log.record(WireEntry {
        request_id: parts
            .headers
            .get(REQUEST_ID_HEADER)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string(),
        method: parts.method.to_string(),
        path: parts.uri.to_string(),
        body: String::from_utf8_lossy(&bytes).into_owned(),
    });
    next.run(Request::from_parts(parts, Body::from(bytes)))
        .await
}

async fn health(State(app): State<CloudApp>) -> Json<Health> {
    let (docs, tokens) = app.service.counts();
    Json(Health {
        status: "ok".into(),
        docs,
        tokens,
        clustered: app.service.is_clustered(),
    })
}

fn parse_batch(body: &[u8]) -> ApiResult<UploadBatch> {
    let text = std::str::from_utf8(body)
        .map_err(|e| ApiError::bad_request(format!("upload is not UTF-8: {e}")))?;
    Ok(UploadBatch::from_jsonl(text)?)
}

async fn upload(State(app): State<CloudApp>, body: Bytes) -> ApiResult<Json<UploadSummary>> {
    let batch = parse_batch(&body)?;
    Ok(Json(blocking(move || app.service.upload(batch)).await?))
}

async fn cluster(State(app): State<CloudApp>, body: Bytes) -> ApiResult<Json<ClusterSummary>> {
    let req: ClusterRequest = parse_json(&body)?;
    Ok(Json(
        blocking(move || app.service.cluster(req.k, req.kmeans_iters)).await?,
    ))
}

async fn clusters(State(app): State<CloudApp>) -> ApiResult<Json<Vec<ClusterInfo>>> {
    Ok(Json(blocking(move || app.service.cluster_info()).await?))
}

async fn search(State(app): State<CloudApp>, body: Bytes) -> ApiResult<Json<SearchResponse>> {
    let req: SearchRequest = parse_json(&body)?;
    Ok(Json(
        blocking(move || app.service.search(&req.tokens, &req.clusters)).await?,
    ))
}

/// Envelope endpoint: every reply, including failures, is a [`WireMessage`]
/// carrying the caller's `request_id`.
async fn message(State(app): State<CloudApp>, body: Bytes) -> Response {
    let msg: WireMessage = match serde_json::from_slice(&body) {
        Ok(m) => m,
        Err(e) => {
            let reply = WireMessage::error(format!("malformed envelope: {e}"), 400, "");
            return (StatusCode::BAD_REQUEST, Json(reply)).into_response();
        }
    };
    let id = msg.request_id.clone();
    match dispatch(app, msg).await {
        Ok(reply) => Json(reply).into_response(),
        Err(e) => {
            let status = e.status;
            let reply = WireMessage::error(e.message, status.as_u16(), id);
            (
                status,
                [(header::CONTENT_TYPE, "application/json")],
                Json(reply),
            )
                .into_response()
        }
    }
}

async fn dispatch(app: CloudApp, msg: WireMessage) -> ApiResult<WireMessage> {
    if msg.version != WIRE_VERSION {
        return Err(ApiError::bad_request(format!(
            "unsupported wire version {:?}",
            msg.version
        )));
    }
    let id = msg.request_id.clone();
    let to_value = |v: serde_json::Result<Value>| {
        v.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    };
    match msg.message_kind() {
        Some(MessageKind::Upload) => {
            let text = msg
                .payload
                .get("batch")
                .and_then(Value::as_str)
                .ok_or_else(|| ApiError::bad_request("upload payload needs a \"batch\" string"))?;
            let batch = parse_batch(text.as_bytes())?;
            let summary = blocking(move || app.service.upload(batch)).await?;
            Ok(WireMessage::new(
                MessageKind::Upload,
                to_value(serde_json::to_value(summary))?,
                id,
            ))
        }
        Some(MessageKind::Search) => {
            let req: SearchRequest = serde_json::from_value(msg.payload)
                .map_err(|e| ApiError::bad_request(format!("malformed search payload: {e}")))?;
            let resp = blocking(move || app.service.search(&req.tokens, &req.clusters)).await?;
            Ok(WireMessage::new(
                MessageKind::SearchResult,
                to_value(serde_json::to_value(resp))?,
                id,
            ))
        }
        Some(MessageKind::ClusterInfo) => {
            let info = blocking(move || app.service.cluster_info()).await?;
            Ok(WireMessage::new(
                MessageKind::ClusterInfo,
                to_value(serde_json::to_value(info))?,
                id,
            ))
        }
        _ => Err(ApiError::bad_request(format!(
            "unsupported message kind {:?}",
            msg.kind
        ))),
    }
}
