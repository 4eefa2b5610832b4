use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use prunesearch_core::analytics::{abstract_term_count, HistoryLog, RadiusPolicy};
use prunesearch_core::cloud::CloudService;
use prunesearch_core::corpus::{
    distinct_terms, prepare_upload, Document, SecretKey, TermToken, UploadBatch, Vocabulary,
};
use prunesearch_core::edge::{CloudBackend, EdgeConfig, EdgeEngine};
use prunesearch_core::semantics::SimilarityProvider;
use prunesearch_core::{ClusterId, Result};
use prunesearch_transport::{cloud_router, spawn, CloudClient, WireLog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::queries::{
    assign_relevance, split_benchmark, synthesize_queries, BenchmarkQuery, PER_QUERY,
    TRAIN_FRACTION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    pub k: usize,
    pub kmeans_iters: usize,
    pub prune_k: usize,
    pub keywords_per_doc: usize,
    pub train_fraction: f64,
    pub init_terms: usize,
    pub expand_n: usize,
    pub maintenance_every: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let edge = EdgeConfig::default();
        Self {
            seed: 42,
            k: prunesearch_core::cloud::DEFAULT_K,
            kmeans_iters: 0,
            prune_k: edge.prune_k,
            keywords_per_doc: crate::queries::PER_DOC_KEYWORDS,
            train_fraction: TRAIN_FRACTION,
            init_terms: edge.init_terms,
            expand_n: edge.expand_n,
            maintenance_every: edge.maintenance_every,
        }
    }
}

/// The key a benchmark run uses; derived from the seed so runs repeat.
pub fn bench_key(seed: u64) -> SecretKey {
    SecretKey::from_bytes(ChaCha8Rng::seed_from_u64(seed).random())
}

/// Documents, their encrypted upload and the plaintext the edge keeps.
pub struct Prepared {
    pub key: SecretKey,
    pub batch: UploadBatch,
    pub vocab: Vocabulary,
    pub distinct_terms: usize,
    pub queries: Vec<BenchmarkQuery>,
}

pub fn prepare(docs: &[Document], cfg: &BenchConfig) -> Result<Prepared> {
    let key = bench_key(cfg.seed);
    let (batch, vocab) = prepare_upload(docs, cfg.keywords_per_doc, &key)?;
    let queries = synthesize_queries(docs, cfg.keywords_per_doc, PER_QUERY, cfg.seed, None);
    Ok(Prepared {
        key,
        batch,
        vocab,
        distinct_terms: distinct_terms(docs).len(),
        queries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: RadiusPolicy,
    pub pruning_accuracy: f64,
    pub abstract_overhead: f64,
    pub abstract_terms: usize,
    pub test_hits: usize,
    pub maintenance_runs: usize,
    pub mean_search_ms: f64,
    pub mean_edge_ms: f64,
    pub mean_cloud_ms: f64,
}

impl PolicyReport {
    /// The same report with wall-clock fields zeroed, for comparisons.
    pub fn without_timings(&self) -> Self {
        Self {
            mean_search_ms: 0.0,
            mean_edge_ms: 0.0,
            mean_cloud_ms: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub k: usize,
    pub prune_k: usize,
    pub docs: usize,
    pub distinct_terms: usize,
    pub train_queries: usize,
    pub test_queries: usize,
    pub policies: Vec<PolicyReport>,
}

impl BenchReport {
    pub fn policy(&self, p: RadiusPolicy) -> Option<&PolicyReport> {
        self.policies.iter().find(|r| r.policy == p)
    }

    pub fn without_timings(&self) -> Self {
        Self {
            policies: self
                .policies
                .iter()
                .map(PolicyReport::without_timings)
                .collect(),
            ..self.clone()
        }
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "policy",
            "pruning_accuracy",
            "abstract_overhead",
            "abstract_terms",
            "mean_search_ms",
            "mean_edge_ms",
            "mean_cloud_ms",
        ])?;
        for p in &self.policies {
            w.write_record([
                p.policy.to_string(),
                p.pruning_accuracy.to_string(),
                p.abstract_overhead.to_string(),
                p.abstract_terms.to_string(),
                p.mean_search_ms.to_string(),
                p.mean_edge_ms.to_string(),
                p.mean_cloud_ms.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Token-to-cluster map from the cloud's cluster metadata.
pub fn token_clusters<B: CloudBackend>(backend: &B) -> Result<HashMap<TermToken, ClusterId>> {
    Ok(backend
        .cluster_info()?
        .into_iter()
        .flat_map(|c| c.tokens.into_iter().map(move |t| (t.token, c.cluster_id)))
        .collect())
}

/// Splits the prepared queries and labels them with their relevant clusters.
pub fn labelled_split<B: CloudBackend>(
    prepared: &Prepared,
    backend: &B,
    cfg: &BenchConfig,
) -> Result<(Vec<BenchmarkQuery>, Vec<BenchmarkQuery>)> {
    let mut queries = prepared.queries.clone();
    assign_relevance(
        &mut queries,
        &prepared.key.token_key(),
        &token_clusters(backend)?,
    )?;
    split_benchmark(&queries, cfg.train_fraction, cfg.seed)
}

/// Replays `train` (recording history and maintaining abstracts every
/// `maintenance_every` searches plus once at the end), then scores `test`:
/// a test query hits when a chosen cluster is one of its relevant clusters.
#[allow(clippy::too_many_arguments)]
pub fn run_policy<B: CloudBackend>(
    backend: B,
    prepared: &Prepared,
    provider: &SimilarityProvider,
    train: &[BenchmarkQuery],
    test: &[BenchmarkQuery],
    policy: RadiusPolicy,
    cfg: &BenchConfig,
    history: HistoryLog,
) -> Result<PolicyReport> {
    let edge_cfg = EdgeConfig {
        prune_k: cfg.prune_k,
        expand_n: cfg.expand_n,
        maintenance_every: 0,
        init_terms: cfg.init_terms,
        policy,
        theta: None,
    };
    let engine = EdgeEngine::new(
        prepared.key.token_key(),
        provider.clone(),
        backend,
        edge_cfg,
        history,
    );
    engine.init_from_cloud(&prepared.vocab)?;

    let mut maintenance_runs = 0;
    let maintain = policy.maintains();
    for (i, q) in train.iter().enumerate() {
        engine.execute_search(&q.text, &format!("train-{i}"))?;
        if maintain && cfg.maintenance_every > 0 && (i + 1) % cfg.maintenance_every == 0 {
            engine.maintain()?;
            maintenance_runs += 1;
        }
    }
    if maintain && !train.is_empty() {
        engine.maintain()?;
        maintenance_runs += 1;
    }

    let (mut hits, mut edge, mut cloud) = (0, Duration::ZERO, Duration::ZERO);
    for (i, q) in test.iter().enumerate() {
        let out = engine.execute_search(&q.text, &format!("test-{i}"))?;
        if out
            .prune
            .chosen
            .iter()
            .any(|c| q.relevant_clusters.contains(c))
        {
            hits += 1;
        }
        edge += out.edge_time;
        cloud += out.cloud_time;
    }
    let n = test.len().max(1) as f64;
    let abstract_terms = abstract_term_count(&engine.abstracts());
    let ms = |d: Duration| d.as_secs_f64() * 1000.0 / n;
    Ok(PolicyReport {
        policy,
        pruning_accuracy: if test.is_empty() {
            0.0
        } else {
            hits as f64 / test.len() as f64
        },
        abstract_overhead: if prepared.distinct_terms == 0 {
            0.0
        } else {
            abstract_terms as f64 / prepared.distinct_terms as f64
        },
        abstract_terms,
        test_hits: hits,
        maintenance_runs,
        mean_search_ms: ms(edge + cloud),
        mean_edge_ms: ms(edge),
        mean_cloud_ms: ms(cloud),
    })
}

/// Runs each policy against the same (already clustered) cloud. The backend
/// is cloned per policy; edge state starts fresh each time.
pub fn run_benchmark<B: CloudBackend + Clone>(
    backend: B,
    prepared: &Prepared,
    provider: &SimilarityProvider,
    policies: &[RadiusPolicy],
    cfg: &BenchConfig,
    docs: usize,
) -> Result<BenchReport> {
    let (train, test) = labelled_split(prepared, &backend, cfg)?;
    let mut reports = Vec::with_capacity(policies.len());
    for policy in policies {
        let r = run_policy(
            backend.clone(),
            prepared,
            provider,
            &train,
            &test,
            *policy,
            cfg,
            HistoryLog::in_memory(),
        )?;
        tracing::info!(%policy, accuracy = r.pruning_accuracy, overhead = r.abstract_overhead, "policy done");
        reports.push(r);
    }
    Ok(BenchReport {
        seed: cfg.seed,
        k: cfg.k,
        prune_k: cfg.prune_k,
        docs,
        distinct_terms: prepared.distinct_terms,
        train_queries: train.len(),
        test_queries: test.len(),
        policies: reports,
    })
}

/// Uploads and clusters into a fresh in-process cloud, then runs `policies`.
pub fn run_in_process(
    docs: &[Document],
    provider: &SimilarityProvider,
    policies: &[RadiusPolicy],
    cfg: &BenchConfig,
) -> Result<BenchReport> {
    let prepared = prepare(docs, cfg)?;
    let cloud = Arc::new(CloudService::default());
    cloud.upload(prepared.batch.clone())?;
    cloud.cluster(cfg.k, cfg.kmeans_iters)?;
    run_benchmark(cloud, &prepared, provider, policies, cfg, docs.len())
}

/// The same run with the cloud behind HTTP on an ephemeral local port;
/// every request body the cloud receives goes to `wire`.
pub fn run_over_http(
    docs: &[Document],
    provider: &SimilarityProvider,
    policies: &[RadiusPolicy],
    cfg: &BenchConfig,
    wire: Option<Arc<WireLog>>,
) -> Result<BenchReport> {
    let prepared = prepare(docs, cfg)?;
    let server = spawn(
        cloud_router(Arc::new(CloudService::default()), wire),
        "127.0.0.1:0",
    )?;
    let client = CloudClient::new(&server.url())?;
    client.upload(&prepared.batch)?;
    client.cluster(cfg.k, cfg.kmeans_iters)?;
    let report = run_benchmark(client, &prepared, provider, policies, cfg, docs.len());
    server.shutdown();
    report
}
