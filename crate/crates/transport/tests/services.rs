use std::sync::Arc;
use std::time::{Duration, Instant};

use prunesearch_core::analytics::HistoryLog;
use prunesearch_core::cloud::{CloudService, RankedResult};
use prunesearch_core::corpus::{
    prepare_upload, tokenize_term, Document, SecretKey, UploadBatch, Vocabulary,
};
use prunesearch_core::edge::{EdgeConfig, EdgeEngine};
use prunesearch_core::semantics::{SimilarityProvider, Taxonomy};
use prunesearch_transport::*;
use serde_json::json;

const TAXONOMY: &str =
    "thing\t-\nnetwork\tthing\nrouter\tnetwork\npacket\tnetwork\nswitch\tnetwork\n\
latency\tnetwork\nplant\tthing\ngarden\tplant\ntulip\tplant\norchid\tplant\nflower\tplant\n";

fn corpus() -> Vec<Document> {
    let texts = [
        "router packet switch router",
        "router latency packet",
        "switch latency router",
        "packet packet switch",
        "garden tulip flower",
        "garden orchid flower",
        "tulip orchid garden",
        "flower flower tulip",
        "compost soil garden",
        "firmware router update",
        "bandwidth latency throughput",
        "seedling soil compost",
    ];
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("doc{i:02}"), *t, "").unwrap())
        .collect()
}

fn key() -> SecretKey {
    SecretKey::from_bytes([11; 32])
}

fn prepared() -> (UploadBatch, Vocabulary) {
    prepare_upload(&corpus(), 15, &key()).unwrap()
}

fn cloud(wire: Option<Arc<WireLog>>) -> (ServerHandle, CloudClient) {
    let server = spawn(
        cloud_router(Arc::new(CloudService::default()), wire),
        "127.0.0.1:0",
    )
    .unwrap();
    let client = CloudClient::new(&server.url()).unwrap();
    (server, client)
}

fn loaded_cloud(k: usize) -> (ServerHandle, CloudClient, Vocabulary) {
    let (server, client) = cloud(None);
    let (batch, vocab) = prepared();
    client.upload(&batch).unwrap();
    client.cluster(k, 0).unwrap();
    (server, client, vocab)
}

fn provider() -> SimilarityProvider {
    SimilarityProvider::taxonomy(Taxonomy::parse(TAXONOMY).unwrap())
}

fn engine<B: prunesearch_core::edge::CloudBackend>(
    backend: B,
    vocab: &Vocabulary,
) -> EdgeEngine<B> {
    let cfg = EdgeConfig {
        prune_k: 2,
        maintenance_every: 0,
        ..EdgeConfig::default()
    };
    let e = EdgeEngine::new(
        key().token_key(),
        provider(),
        backend,
        cfg,
        HistoryLog::in_memory(),
    );
    e.init_from_cloud(vocab).unwrap();
    e
}

#[test]
fn upload_then_remote_search_finds_the_document() {
    let (_s, client, _) = loaded_cloud(3);
    let health = client.health().unwrap();
    assert_eq!((health.docs, health.clustered), (12, true));
    let t = tokenize_term("orchid", &key().token_key()).unwrap();
    let all: Vec<u32> = (0..3).collect();
    let r = client.search(&[t], &all).unwrap();
    assert_eq!(
        r.result.doc_ids().into_iter().collect::<Vec<_>>(),
        ["doc05", "doc06"]
    );
}

#[test]
fn clusters_endpoint_lists_every_cluster() {
    let (_s, client, _) = loaded_cloud(10);
    let info = client.clusters().unwrap();
    assert_eq!(info.len(), 10);
    let ids: Vec<u32> = info.iter().map(|c| c.cluster_id).collect();
    assert_eq!(ids, (0..10).collect::<Vec<_>>());
}

#[test]
fn search_schema_rejects_plaintext_terms() {
    let (s, _client, _) = loaded_cloud(3);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let resp = agent
        .post(&format!("{}/v1/search", s.url()))
        .header("content-type", "application/json")
        .send(json!({"tokens": [], "clusters": [0], "terms": ["router"]}).to_string())
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let resp = agent
        .post(&format!("{}/v1/search", s.url()))
        .send("{not json")
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
}

#[test]
fn unknown_cluster_is_404() {
    let (_s, client, _) = loaded_cloud(3);
    let t = tokenize_term("router", &key().token_key()).unwrap();
    let err = client.search(&[t], &[7]).unwrap_err();
    assert_eq!(err.status(), Some(404), "{err}");
}

#[test]
fn search_before_clustering_is_a_conflict() {
    let (_s, client) = cloud(None);
    client.upload(&prepared().0).unwrap();
    let err = client.search(&[], &[0]).unwrap_err();
    assert_eq!(err.status(), Some(409));
}

#[test]
fn request_id_is_echoed() {
    let (s, _client, _) = loaded_cloud(3);
    let resp = ureq::get(&format!("{}/v1/health", s.url()))
        .header("x-request-id", "abc-123")
        .call()
        .unwrap();
    assert_eq!(resp.headers().get("x-request-id").unwrap(), "abc-123");
    let resp = ureq::get(&format!("{}/v1/health", s.url())).call().unwrap();
    assert!(resp.headers().get("x-request-id").is_some());
}

#[test]
fn envelope_dispatch_and_unknown_kind() {
    let (_s, client, _) = loaded_cloud(3);
    let t = tokenize_term("tulip", &key().token_key()).unwrap();
    let msg = WireMessage::new(
        MessageKind::Search,
        json!({"tokens": [t], "clusters": [0, 1, 2]}),
        "m-1",
    );
    let reply = client.message(&msg).unwrap();
    assert_eq!(
        (reply.kind.as_str(), reply.request_id.as_str()),
        ("search_result", "m-1")
    );
    let ranked: RankedResult = serde_json::from_value(reply.payload).unwrap();
    assert_eq!(ranked.len(), 3);

    let info = client
        .message(&WireMessage::new(
            MessageKind::ClusterInfo,
            json!({}),
            "m-2",
        ))
        .unwrap();
    assert_eq!(info.payload.as_array().unwrap().len(), 3);

    // the connection survives an unknown kind; the reply is an error envelope
    let bogus = WireMessage {
        kind: "teleport".into(),
        ..WireMessage::new(MessageKind::Query, json!({}), "m-3")
    };
    let err = client.message(&bogus).unwrap_err();
    assert_eq!(err.status(), Some(400));
    assert!(client.health().is_ok());
}

#[test]
fn envelope_error_keeps_request_id() {
    let (s, _client, _) = loaded_cloud(3);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let body =
        json!({"version": "1", "kind": "teleport", "payload": {}, "request_id": "m-9"}).to_string();
    let mut resp = agent
        .post(&format!("{}/v1/message", s.url()))
        .send(body)
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let reply: WireMessage =
        serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(
        (reply.kind.as_str(), reply.request_id.as_str()),
        ("error", "m-9")
    );
}

#[test]
fn stopped_server_gives_a_connection_error_within_the_timeout() {
    let (s, _client) = cloud(None);
    let url = s.url();
    s.shutdown();
    let client = CloudClient::with_config(
        &url,
        ClientConfig {
            timeout: Duration::from_secs(2),
            ..Default::default()
        },
    )
    .unwrap();
    let start = Instant::now();
    let err = client.health().unwrap_err();
    assert!(start.elapsed() < Duration::from_secs(3));
    assert!(
        matches!(
            err,
            TransportError::Connect { .. } | TransportError::Timeout { .. }
        ),
        "{err:?}"
    );
}

#[test]
fn oversized_upload_is_rejected_before_sending() {
    let (s, client) = cloud(None);
    let batch = UploadBatch {
        encrypted_docs: vec![prunesearch_core::corpus::EncryptedDoc {
            doc_id: "huge".into(),
            ciphertext: vec![0u8; MAX_BODY_BYTES / 2 + 1],
        }],
        ..Default::default()
    };
    let err = client.upload(&batch).unwrap_err();
    assert!(
        matches!(err, TransportError::BodyTooLarge { limit, .. } if limit == MAX_BODY_BYTES),
        "{err:?}"
    );
    assert_eq!(client.health().unwrap().docs, 0);
    drop(s);
}

#[test]
fn remote_backend_matches_in_process_backend() {
    let (_s, client, vocab) = loaded_cloud(3);
    let local_cloud = Arc::new(CloudService::default());
    local_cloud.upload(prepared().0).unwrap();
    local_cloud.cluster(3, 0).unwrap();
    let remote = engine(client, &vocab);
    let local = engine(local_cloud, &vocab);
    assert_eq!(*remote.abstracts(), *local.abstracts());
    for q in [
        "router latency",
        "tulip",
        "garden compost soil",
        "nothing matches here",
    ] {
        let a = remote.execute_search(q, "s").unwrap();
        let b = local.execute_search(q, "s").unwrap();
        assert_eq!(
            serde_json::to_string(&a.result).unwrap(),
            serde_json::to_string(&b.result).unwrap(),
            "{q}"
        );
        assert_eq!(a.prune, b.prune);
    }
}

fn edge_stack(wire: Option<Arc<WireLog>>) -> (ServerHandle, ServerHandle, EdgeClient, Vocabulary) {
    let (cloud_server, client) = cloud(wire);
    let (batch, vocab) = prepared();
    client.upload(&batch).unwrap();
    client.cluster(3, 0).unwrap();
    let app = Arc::new(EdgeApp::new(engine(client, &vocab), None));
    let edge_server = spawn(edge_router(app), "127.0.0.1:0").unwrap();
    let edge = EdgeClient::new(&edge_server.url()).unwrap();
    (cloud_server, edge_server, edge, vocab)
}

#[test]
fn edge_query_round_trip_equals_in_process_search() {
    let (_c, _e, edge, vocab) = edge_stack(None);
    let local_cloud = Arc::new(CloudService::default());
    local_cloud.upload(prepared().0).unwrap();
    local_cloud.cluster(3, 0).unwrap();
    let local = engine(local_cloud, &vocab);
    for q in ["router packet", "orchid flower", "soil"] {
        let remote = edge.query(q, "s1").unwrap();
        let inproc = local.execute_search(q, "s1").unwrap();
        assert_eq!(
            serde_json::to_string(&remote.result).unwrap(),
            serde_json::to_string(&inproc.result).unwrap()
        );
        assert_eq!(remote.chosen, inproc.prune.chosen);
    }
    assert_eq!(edge.health().unwrap().history, 3);
}

#[test]
fn concurrent_identical_queries_agree() {
    let (_c, _e, edge, _) = edge_stack(None);
    let results: Vec<QueryResponse> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let edge = edge.clone();
                s.spawn(move || {
                    edge.query("router latency packet", &format!("c{i}"))
                        .unwrap()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(edge.health().unwrap().history, 8);
}

#[test]
fn malformed_query_body_is_400() {
    let (_c, e, edge, _) = edge_stack(None);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let resp = agent
        .post(&format!("{}/v1/query", e.url()))
        .send("{\"q\": 1}")
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let err = edge.query("the of and", "s").unwrap_err();
    assert_eq!(err.status(), Some(400));
}

#[test]
fn cloud_down_mid_request_is_502() {
    let (c, _e, edge, _) = edge_stack(None);
    assert!(edge.query("router", "s").is_ok());
    c.shutdown();
    let err = edge.query("router", "s").unwrap_err();
    assert_eq!(err.status(), Some(502), "{err}");
}

#[test]
fn maintenance_endpoint_and_abstracts() {
    let (_c, _e, edge, _) = edge_stack(None);
    for q in ["router packet", "packet switch", "router latency"] {
        edge.query(q, "m").unwrap();
    }
    let summary = edge.maintain().unwrap();
    assert!(summary.passes >= 1);
    let abstracts = edge.abstracts().unwrap();
    assert_eq!(abstracts.len(), 3);
    assert_eq!(
        abstracts.iter().map(|a| a.len()).sum::<usize>(),
        summary.abstract_terms
    );
}

#[test]
fn wire_log_holds_no_plaintext() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wire.jsonl");
    let log = Arc::new(WireLog::to_file(&path).unwrap());
    let (_c, _e, edge, _) = edge_stack(Some(log.clone()));
    for q in [
        "router packet",
        "orchid flower",
        "compost seedling",
        "firmware bandwidth",
    ] {
        edge.query(q, "w").unwrap();
    }
    let entries = read_wire_log(&path).unwrap();
    assert_eq!(entries, log.entries());
    assert!(entries.iter().any(|e| e.path == "/v1/upload"));
    assert_eq!(entries.iter().filter(|e| e.path == "/v1/search").count(), 4);
    let words: Vec<String> = corpus()
        .iter()
        .flat_map(|d| {
            d.text
                .split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .collect();
    let long: Vec<&str> = words
        .iter()
        .map(String::as_str)
        .filter(|w| w.len() >= 6)
        .collect();
    assert!(!long.is_empty());
    assert!(leaked_words(&entries, long.iter().copied()).is_empty());
}
