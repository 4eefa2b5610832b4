//! JSON bodies exchanged between the tiers.
//!
//! Everything sent to the cloud carries token hex and cluster ids only.

use std::collections::BTreeSet;

use prunesearch_core::cloud::RankedResult;
use prunesearch_core::corpus::TermToken;
use prunesearch_core::ClusterId;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const WIRE_VERSION: &str = "1";
pub const REQUEST_ID_HEADER: &str = "x-request-id";

/// Body of `POST /v1/search`. Unknown fields (a stray `terms` list, say)
/// are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub tokens: Vec<TermToken>,
    pub clusters: Vec<ClusterId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRequest {
    pub k: usize,
    #[serde(default)]
    pub kmeans_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub query: String,
    pub session_id: String,
}

/// Ranked result plus the clusters the edge pruned the search down to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    #[serde(flatten)]
    pub result: RankedResult,
    pub chosen: Vec<ClusterId>,
    pub terms: Vec<String>,
    pub expanded: Vec<String>,
    pub hit_clusters: BTreeSet<ClusterId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub docs: usize,
    pub tokens: usize,
    pub clustered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub code: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Upload,
    Search,
    SearchResult,
    ClusterInfo,
    Query,
    Error,
}

/// Envelope accepted on `POST /v1/message`. `kind` stays a raw string on
/// the way in so an unknown kind yields an error envelope, not a 400 from
/// the JSON layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub version: String,
    pub kind: String,
    #[serde(default)]
    pub payload: Value,
    pub request_id: String,
}

impl WireMessage {
    pub fn new(kind: MessageKind, payload: Value, request_id: impl Into<String>) -> Self {
        Self {
            version: WIRE_VERSION.to_string(),
            kind: serde_json::to_value(kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            payload,
            request_id: request_id.into(),
        }
    }

    pub fn error(msg: impl Into<String>, code: u16, request_id: impl Into<String>) -> Self {
        let body = ErrorBody {
            error: msg.into(),
            code,
        };
        Self::new(
            MessageKind::Error,
            serde_json::to_value(body).unwrap_or(Value::Null),
            request_id,
        )
    }

    pub fn message_kind(&self) -> Option<MessageKind> {
        serde_json::from_value(Value::String(self.kind.clone())).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_request_rejects_terms() {
        let err = serde_json::from_str::<SearchRequest>(
            r#"{"tokens":[],"clusters":[0],"terms":["router"]}"#,
        );
        assert!(err.is_err());
        let ok: SearchRequest = serde_json::from_str(r#"{"tokens":[],"clusters":[0]}"#).unwrap();
        assert_eq!(ok.clusters, [0]);
    }

    #[test]
    fn envelope_kinds() {
        let m = WireMessage::new(MessageKind::SearchResult, Value::Null, "r1");
        assert_eq!(m.kind, "search_result");
        assert_eq!(m.message_kind(), Some(MessageKind::SearchResult));
        let unknown = WireMessage {
            kind: "teleport".into(),
            ..m
        };
        assert_eq!(unknown.message_kind(), None);
    }
}
