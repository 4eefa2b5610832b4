//! Blocking HTTP clients for both services.

use std::time::Duration;

use prunesearch_core::analytics::Abstract;
use prunesearch_core::cloud::{ClusterInfo, ClusterSummary, SearchResponse, UploadSummary};
use prunesearch_core::corpus::{TermToken, UploadBatch};
use prunesearch_core::edge::CloudBackend;
use prunesearch_core::ClusterId;
use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

use crate::edge_server::{EdgeHealth, MaintenanceSummary};
use crate::server::{base_url, next_request_id, MAX_BODY_BYTES};
use crate::wire::{
    ClusterRequest, ErrorBody, Health, QueryRequest, QueryResponse, SearchRequest, WireMessage,
    REQUEST_ID_HEADER,
};
use crate::{Result, TransportError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClientConfig {
    pub timeout: Duration,
    /// Applies to request bodies (checked before sending) and response bodies.
    pub max_body: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
            max_body: MAX_BODY_BYTES,
        }
    }
}

#[derive(Debug, Clone)]
struct Http {
    agent: Agent,
    base: String,
    config: ClientConfig,
}

impl Http {
    fn new(addr: &str, config: ClientConfig) -> Result<Self> {
        let agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .max_redirects(0)
            .build()
            .into();
        Ok(Self {
            agent,
            base: base_url(addr)?,
            config,
        })
    }

    fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R> {
        let url = format!("{}{path}", self.base);
        let resp = self
            .agent
            .get(&url)
            .header(REQUEST_ID_HEADER, next_request_id("cli"))
            .call()
            .map_err(|e| TransportError::from_ureq(&url, self.config.timeout, e))?;
        self.finish(&url, resp)
    }

    fn post<R: DeserializeOwned>(&self, path: &str, body: String, content_type: &str) -> Result<R> {
        if body.len() > self.config.max_body {
            return Err(TransportError::BodyTooLarge {
                size: body.len(),
                limit: self.config.max_body,
            });
        }
        let url = format!("{}{path}", self.base);
        let resp = self
            .agent
            .post(&url)
            .header("content-type", content_type)
            .header(REQUEST_ID_HEADER, next_request_id("cli"))
            .send(body)
            .map_err(|e| TransportError::from_ureq(&url, self.config.timeout, e))?;
        self.finish(&url, resp)
    }

    fn post_json<T: Serialize, R: DeserializeOwned>(&self, path: &str, body: &T) -> Result<R> {
        let text = serde_json::to_string(body).map_err(prunesearch_core::Error::from)?;
        self.post(path, text, "application/json")
    }

    fn finish<R: DeserializeOwned>(
        &self,
        url: &str,
        mut resp: ureq::http::Response<ureq::Body>,
    ) -> Result<R> {
        let status = resp.status();
        let text = resp
            .body_mut()
            .with_config()
            .limit(self.config.max_body as u64)
            .read_to_string()
            .map_err(|e| TransportError::from_ureq(url, self.config.timeout, e))?;
        if !status.is_success() {
            let message = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            return Err(TransportError::Status {
                url: url.to_string(),
                status: status.as_u16(),
                message,
            });
        }
        serde_json::from_str(&text).map_err(|e| TransportError::Decode {
            url: url.to_string(),
            msg: e.to_string(),
        })
    }
}

/// Client for the cloud service. Also usable as the edge engine's backend.
#[derive(Debug, Clone)]
pub struct CloudClient {
    http: Http,
}

impl CloudClient {
    pub fn new(addr: &str) -> Result<Self> {
        Self::with_config(addr, ClientConfig::default())
    }

    pub fn with_config(addr: &str, config: ClientConfig) -> Result<Self> {
        Ok(Self {
            http: Http::new(addr, config)?,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.http.base
    }

    pub fn health(&self) -> Result<Health> {
        self.http.get("/v1/health")
    }

    /// Sent once; a failed upload is not retried since merging is not
    /// idempotent for callers that changed the batch in between.
    pub fn upload(&self, batch: &UploadBatch) -> Result<UploadSummary> {
        self.http
            .post("/v1/upload", batch.to_jsonl(), "application/x-ndjson")
    }

    pub fn cluster(&self, k: usize, kmeans_iters: usize) -> Result<ClusterSummary> {
        self.http
            .post_json("/v1/cluster", &ClusterRequest { k, kmeans_iters })
    }

    pub fn clusters(&self) -> Result<Vec<ClusterInfo>> {
        self.http.get("/v1/clusters")
    }

    pub fn search(&self, tokens: &[TermToken], clusters: &[ClusterId]) -> Result<SearchResponse> {
        self.http.post_json(
            "/v1/search",
            &SearchRequest {
                tokens: tokens.to_vec(),
                clusters: clusters.to_vec(),
            },
        )
    }

    pub fn message(&self, msg: &WireMessage) -> Result<WireMessage> {
        self.http.post_json("/v1/message", msg)
    }
}

impl CloudBackend for CloudClient {
    fn search(
        &self,
        tokens: &[TermToken],
        clusters: &[ClusterId],
    ) -> prunesearch_core::Result<SearchResponse> {
        Ok(CloudClient::search(self, tokens, clusters)?)
    }

    fn cluster_info(&self) -> prunesearch_core::Result<Vec<ClusterInfo>> {
        Ok(self.clusters()?)
    }
}

#[derive(Debug, Clone)]
pub struct EdgeClient {
    http: Http,
}

impl EdgeClient {
    pub fn new(addr: &str) -> Result<Self> {
        Self::with_config(addr, ClientConfig::default())
    }

    pub fn with_config(addr: &str, config: ClientConfig) -> Result<Self> {
        Ok(Self {
            http: Http::new(addr, config)?,
        })
    }

    pub fn health(&self) -> Result<EdgeHealth> {
        self.http.get("/v1/health")
    }

    pub fn query(&self, query: &str, session_id: &str) -> Result<QueryResponse> {
        self.http.post_json(
            "/v1/query",
            &QueryRequest {
                query: query.into(),
                session_id: session_id.into(),
            },
        )
    }

    pub fn maintain(&self) -> Result<MaintenanceSummary> {
        self.http
            .post("/v1/maintain", String::new(), "application/json")
    }

    pub fn abstracts(&self) -> Result<Vec<Abstract>> {
        self.http.get("/v1/abstracts")
    }
}
