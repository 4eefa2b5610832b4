use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::prune::{prune, PruneDecision, DEFAULT_PRUNE_K};
use super::query::{process_query, ProcessedQuery, DEFAULT_EXPAND_N};
use crate::analytics::{
    init_abstracts, maintain_abstracts, Abstract, HistoryLog, MaintenanceConfig, MaintenanceReport,
    RadiusPolicy, SearchRecord, DEFAULT_INIT_TERMS,
};
use crate::cloud::{CloudService, ClusterInfo, RankedResult, SearchResponse};
use crate::corpus::{tokenize_term, TermToken, TokenKey, Vocabulary};
use crate::semantics::SimilarityProvider;
use crate::{ClusterId, Error, Result};

/// What the edge needs from the cloud tier.
pub trait CloudBackend: Send + Sync {
    fn search(&self, tokens: &[TermToken], clusters: &[ClusterId]) -> Result<SearchResponse>;
    fn cluster_info(&self) -> Result<Vec<ClusterInfo>>;
}

impl CloudBackend for CloudService {
    fn search(&self, tokens: &[TermToken], clusters: &[ClusterId]) -> Result<SearchResponse> {
        CloudService::search(self, tokens, clusters)
    }

    fn cluster_info(&self) -> Result<Vec<ClusterInfo>> {
        CloudService::cluster_info(self)
    }
}

impl<B: CloudBackend + ?Sized> CloudBackend for Arc<B> {
    fn search(&self, tokens: &[TermToken], clusters: &[ClusterId]) -> Result<SearchResponse> {
        (**self).search(tokens, clusters)
    }

    fn cluster_info(&self) -> Result<Vec<ClusterInfo>> {
        (**self).cluster_info()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeConfig {
    pub prune_k: usize,
    pub expand_n: usize,
    /// Run maintenance after every this many recorded searches; 0 disables.
    pub maintenance_every: usize,
    pub init_terms: usize,
    pub policy: RadiusPolicy,
    /// Qualification threshold; unset means `1/m`.
    pub theta: Option<f64>,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            prune_k: DEFAULT_PRUNE_K,
            expand_n: DEFAULT_EXPAND_N,
            maintenance_every: 100,
            init_terms: DEFAULT_INIT_TERMS,
            policy: RadiusPolicy::EdgeBased,
            theta: None,
        }
    }
}

impl EdgeConfig {
    pub fn maintenance(&self) -> MaintenanceConfig {
        MaintenanceConfig {
            policy: self.policy,
            theta: self.theta,
            ..MaintenanceConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub query: ProcessedQuery,
    pub prune: PruneDecision,
    pub result: RankedResult,
    pub hit_clusters: Vec<ClusterId>,
    pub edge_time: Duration,
    pub cloud_time: Duration,
}

/// The online edge: query processing, pruning against the current abstract
/// snapshot, tokenization and history recording.
pub struct EdgeEngine<B> {
    key: TokenKey,
    provider: SimilarityProvider,
    backend: B,
    config: EdgeConfig,
    abstracts: RwLock<Arc<Vec<Abstract>>>,
    cluster_sizes: RwLock<BTreeMap<ClusterId, usize>>,
    history: HistoryLog,
    maintenance: Mutex<()>,
}

impl<B: CloudBackend> EdgeEngine<B> {
    pub fn new(
        key: TokenKey,
        provider: SimilarityProvider,
        backend: B,
        config: EdgeConfig,
        history: HistoryLog,
    ) -> Self {
        Self {
            key,
            provider,
            backend,
            config,
            abstracts: RwLock::new(Arc::new(Vec::new())),
            cluster_sizes: RwLock::new(BTreeMap::new()),
            history,
            maintenance: Mutex::new(()),
        }
    }

    /// Fetches cluster metadata and seeds abstracts from the highest
    /// document-count tokens, named through `vocab`.
    pub fn init_from_cloud(&self, vocab: &Vocabulary) -> Result<()> {
        let info = self.backend.cluster_info()?;
        let assoc: BTreeMap<ClusterId, Vec<(TermToken, usize)>> = info
            .iter()
            .map(|c| {
                (
                    c.cluster_id,
                    c.tokens.iter().map(|t| (t.token, t.doc_count)).collect(),
                )
            })
            .collect();
        self.set_cluster_sizes(&info);
        self.swap_abstracts(init_abstracts(&assoc, self.config.init_terms, vocab));
        Ok(())
    }

    /// Uses previously saved abstracts; cluster sizes still come from the cloud.
    pub fn load_state(&self, abstracts: Vec<Abstract>) -> Result<()> {
        let info = self.backend.cluster_info()?;
        let known: BTreeSet<ClusterId> = info.iter().map(|c| c.cluster_id).collect();
        if let Some(a) = abstracts.iter().find(|a| !known.contains(&a.cluster_id)) {
            return Err(Error::UnknownCluster(a.cluster_id));
        }
        self.set_cluster_sizes(&info);
        self.swap_abstracts(abstracts);
        Ok(())
    }

    fn set_cluster_sizes(&self, info: &[ClusterInfo]) {
        *self.cluster_sizes.write() = info.iter().map(|c| (c.cluster_id, c.size)).collect();
    }

    fn swap_abstracts(&self, abstracts: Vec<Abstract>) {
        *self.abstracts.write() = Arc::new(abstracts);
    }

    pub fn abstracts(&self) -> Arc<Vec<Abstract>> {
        Arc::clone(&self.abstracts.read())
    }

    pub fn history(&self) -> &HistoryLog {
        &self.history
    }

    pub fn config(&self) -> &EdgeConfig {
        &self.config
    }

    pub fn provider(&self) -> &SimilarityProvider {
        &self.provider
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Query → prune → tokenize → cloud search → history. Triggers
    /// maintenance every `maintenance_every` recorded searches.
    pub fn execute_search(&self, raw: &str, session_id: &str) -> Result<SearchOutcome> {
        let start = Instant::now();
        let query = process_query(raw, session_id, &self.provider, self.config.expand_n)?;
        let abstracts = self.abstracts();
        if abstracts.is_empty() {
            return Err(Error::InvalidArgument(
                "edge has no abstracts; initialize it first".into(),
            ));
        }
        let decision = prune(&query, &abstracts, self.config.prune_k, &self.provider);
        let tokens: Vec<TermToken> = query
            .expanded
            .iter()
            .map(|t| tokenize_term(t, &self.key))
            .collect::<Result<_>>()?;
        let edge_time = start.elapsed();

        let cloud_start = Instant::now();
        let response = self.backend.search(&tokens, &decision.chosen)?;
        let cloud_time = cloud_start.elapsed();

        // expanded starts with the user's own terms
        let term_clusters: Vec<Option<ClusterId>> = response
            .token_clusters
            .iter()
            .take(query.terms.len())
            .copied()
            .chain(std::iter::repeat(None))
            .take(query.terms.len())
            .collect();
        let hit_clusters: Vec<ClusterId> = term_clusters
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let record = SearchRecord {
            session_id: session_id.to_string(),
            timestamp_ms: now_ms(),
            raw_query: raw.to_string(),
            terms: query.terms.clone(),
            hit_clusters: hit_clusters.clone(),
            term_clusters,
            result_count: response.result.len(),
        };
        self.history.append(record)?;
        let every = self.config.maintenance_every;
        if every > 0 && self.history.len().is_multiple_of(every) {
            self.maintain()?;
        }
        Ok(SearchOutcome {
            query,
            prune: decision,
            result: response.result,
            hit_clusters,
            edge_time,
            cloud_time,
        })
    }

    /// Runs one maintenance pass over the full history and swaps in the result.
    pub fn maintain(&self) -> Result<MaintenanceReport> {
        let _guard = self.maintenance.lock();
        let history = self.history.snapshot();
        let current = self.abstracts();
        let sizes = self.cluster_sizes.read().clone();
        let report = maintain_abstracts(
            &history,
            &current,
            &sizes,
            &self.provider,
            &self.config.maintenance(),
        )?;
        tracing::info!(
            records = history.len(),
            decisions = report.decisions.len(),
            passes = report.passes,
            terms = report.abstracts.iter().map(Abstract::len).sum::<usize>(),
            "abstract maintenance"
        );
        self.swap_abstracts(report.abstracts.clone());
        Ok(report)
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}
