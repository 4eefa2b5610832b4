//! Pieces shared by both services: error responses, request ids, body
//! limits and a background runner for tests and embedding.

use std::future::Future;
use std::net::{SocketAddr, TcpListener as StdListener};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread::JoinHandle;

use axum::extract::Request;
use axum::http::{HeaderValue, StatusCode};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};
use prunesearch_core::Error;
use tokio::sync::oneshot;

use crate::wire::{ErrorBody, REQUEST_ID_HEADER};
use crate::{Result, TransportError};

/// Largest request body either service accepts, and the client-side limit.
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::EmptyTerm
            | Error::EmptyQuery
            | Error::QueryReducedToEmpty
            | Error::DuplicateDocId(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Json(_) => StatusCode::BAD_REQUEST,
            Error::UnknownCluster(_) | Error::UnknownToken(_) | Error::NoHistory(_) => {
                StatusCode::NOT_FOUND
            }
            Error::NotClustered | Error::NoQueryTraffic => StatusCode::CONFLICT,
            Error::Backend(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("worker failed: {e}"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(status = %self.status, error = %self.message, "request failed");
        } else {
            tracing::debug!(status = %self.status, error = %self.message, "request rejected");
        }
        let body = ErrorBody {
            error: self.message,
            code: self.status.as_u16(),
        };
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

/// Parses a JSON body, answering 400 (rather than axum's 422) on schema
/// errors.
pub fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

/// Runs blocking core work off the async workers.
pub async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> prunesearch_core::Result<T> + Send + 'static,
    T: Send + 'static,
{
    Ok(tokio::task::spawn_blocking(f).await??)
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

pub fn next_request_id(prefix: &str) -> String {
    format!(
        "{prefix}-{}-{}",
        std::process::id(),
        NEXT_ID.fetch_add(1, Ordering::Relaxed)
    )
}

/// Echoes `x-request-id`, minting one when the caller sent none.
pub async fn request_id(mut req: Request, next: Next) -> Response {
    let id = match req.headers().get(REQUEST_ID_HEADER) {
        Some(v) => v.clone(),
        None => {
            let v = HeaderValue::from_str(&next_request_id("srv")).expect("ascii id");
            req.headers_mut().insert(REQUEST_ID_HEADER, v.clone());
            v
        }
    };
    let mut resp = next.run(req).await;
    resp.headers_mut().insert(REQUEST_ID_HEADER, id);
    resp
}

/// Serves `router` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    router: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router)
        .with_graceful_shutdown(shutdown)
        .await
}

/// A service running on its own runtime thread; stopped on drop.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `bind` (use port 0 for an ephemeral port) and serves `router` on a
/// background thread.
pub fn spawn(router: Router, bind: &str) -> Result<ServerHandle> {
    let std_listener = StdListener::bind(bind)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("prunesearch-http")
        .enable_all()
        .build()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name(format!("serve-{addr}"))
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(std_listener) {
                    Ok(l) => l,
                    Err(e) => {
                        tracing::error!(error = %e, "cannot adopt listener");
                        return;
                    }
                };
                if let Err(e) = serve(listener, router, async {
                    let _ = rx.await;
                })
                .await
                {
                    tracing::error!(error = %e, "server stopped with an error");
                }
            });
        })?;
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Resolves a `--bind`/`--cloud-addr` style value into a base URL.
pub fn base_url(addr: &str) -> Result<String> {
    let trimmed = addr.trim().trim_end_matches('/');
    if trimmed.is_empty() {
        return Err(TransportError::Address(addr.to_string()));
    }
    if trimmed.starts_with("http://") {
        Ok(trimmed.to_string())
    } else if trimmed.contains("://") {
        Err(TransportError::Address(addr.to_string()))
    } else {
        Ok(format!("http://{trimmed}"))
    }
}
