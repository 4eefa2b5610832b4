use std::path::PathBuf;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::cluster::{cluster_terms_counting_orphans, refine_clusters, select_centroids};
use super::search::{search_clusters, RankedResult};
use super::store::CloudState;
use crate::corpus::{TermToken, UploadBatch};
use crate::{ClusterId, Error, Result};

/// Search output plus the cluster each query token belongs to (`None` for
/// tokens the cloud has never seen).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    #[serde(flatten)]
    pub result: RankedResult,
    pub token_clusters: Vec<Option<ClusterId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDocCount {
    pub token: TermToken,
    pub doc_count: usize,
}

/// Cluster metadata: no postings, no ciphertext.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub cluster_id: ClusterId,
    pub size: usize,
    pub tokens: Vec<TokenDocCount>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadSummary {
    pub docs: usize,
    pub tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub tokens: usize,
    pub orphans: usize,
}

/// The cloud tier: one writer lock around the index and its clusters, so a
/// search always sees a consistent pair.
#[derive(Debug, Default)]
pub struct CloudService {
    state: RwLock<CloudState>,
    dir: Option<PathBuf>,
}

impl CloudService {
    pub fn new(state: CloudState) -> Self {
        Self {
            state: RwLock::new(state),
            dir: None,
        }
    }

    /// Opens (or starts) the index stored in `dir`; mutations are persisted there.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let state = CloudState::open_or_default(&dir)?;
        Ok(Self {
            state: RwLock::new(state),
            dir: Some(dir),
        })
    }

    /// Merges a batch. Existing clusters no longer cover the token set and are
    /// dropped; call [`CloudService::cluster`] again afterwards.
    pub fn upload(&self, batch: UploadBatch) -> Result<UploadSummary> {
        let mut s = self.state.write();
        let summary = UploadSummary {
            docs: batch.encrypted_docs.len(),
            tokens: batch.postings.len(),
        };
        s.index.apply_upload(batch);
        if s.clusters.take().is_some() {
            tracing::warn!("upload invalidated the existing clustering");
        }
        self.save(&s)?;
        Ok(summary)
    }

    pub fn cluster(&self, k: usize, kmeans_iters: usize) -> Result<ClusterSummary> {
        let mut s = self.state.write();
        let centroids = select_centroids(&s.index, k)?;
        let (mut cs, orphans) = cluster_terms_counting_orphans(&s.index, &centroids)?;
        if kmeans_iters > 0 {
            cs = refine_clusters(&s.index, cs, kmeans_iters)?;
        }
        let summary = ClusterSummary {
            k: cs.k(),
            tokens: cs.token_count(),
            orphans,
        };
        s.clusters = Some(cs);
        self.save(&s)?;
        tracing::info!(
            k = summary.k,
            tokens = summary.tokens,
            orphans,
            "clustered index"
        );
        Ok(summary)
    }

    pub fn search(&self, tokens: &[TermToken], clusters: &[ClusterId]) -> Result<SearchResponse> {
        let s = self.state.read();
        let cs = s.clusters.as_ref().ok_or(Error::NotClustered)?;
        let result = search_clusters(tokens, clusters, cs, &s.index)?;
        let token_clusters = tokens.iter().map(|t| cs.cluster_of(t)).collect();
        Ok(SearchResponse {
            result,
            token_clusters,
        })
    }

    pub fn cluster_info(&self) -> Result<Vec<ClusterInfo>> {
        let s = self.state.read();
        let cs = s.clusters.as_ref().ok_or(Error::NotClustered)?;
        cs.clusters()
            .iter()
            .map(|c| {
                let tokens = c
                    .members
                    .iter()
                    .map(|t| {
                        Ok(TokenDocCount {
                            token: *t,
                            doc_count: s.index.posting(t)?.len(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ClusterInfo {
                    cluster_id: c.cluster_id,
                    size: c.members.len(),
                    tokens,
                })
            })
            .collect()
    }

    pub fn is_clustered(&self) -> bool {
        self.state.read().clusters.is_some()
    }

    pub fn counts(&self) -> (usize, usize) {
        let s = self.state.read();
        (s.index.doc_count(), s.index.token_count())
    }

    /// Runs `f` against a read snapshot.
    pub fn with_state<R>(&self, f: impl FnOnce(&CloudState) -> R) -> R {
        f(&self.state.read())
    }

    fn save(&self, s: &CloudState) -> Result<()> {
        match &self.dir {
            Some(dir) => s.persist(dir),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{prepare_upload, tokenize_term, Document, SecretKey};

    fn service() -> (CloudService, SecretKey) {
        let key = SecretKey::from_bytes([7; 32]);
        let docs = vec![
            Document::new("a", "router router packet switch", "").unwrap(),
            Document::new("b", "router packet latency", "").unwrap(),
            Document::new("c", "garden flower tulip", "").unwrap(),
        ];
        let (batch, _) = prepare_upload(&docs, 15, &key).unwrap();
        let svc = CloudService::default();
        svc.upload(batch).unwrap();
        (svc, key)
    }

    #[test]
    fn search_requires_clustering() {
        let (svc, key) = service();
        let t = tokenize_term("router", &key.token_key()).unwrap();
        assert!(matches!(svc.search(&[t], &[0]), Err(Error::NotClustered)));
        svc.cluster(2, 0).unwrap();
        let r = svc.search(&[t], &[0, 1]).unwrap();
        assert_eq!(
            r.result.doc_ids().into_iter().collect::<Vec<_>>(),
            ["a", "b"]
        );
        assert!(r.token_clusters[0].is_some());
    }

    #[test]
    fn cluster_info_is_a_partition() {
        let (svc, _) = service();
        svc.cluster(2, 0).unwrap();
        let info = svc.cluster_info().unwrap();
        assert_eq!(info.len(), 2);
        let total: usize = info.iter().map(|c| c.size).sum();
        assert_eq!(total, svc.counts().1);
    }

    #[test]
    fn persisted_service_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let (mem, key) = service();
        let svc = CloudService::open(dir.path()).unwrap();
        svc.upload(mem.with_state(|s| {
            UploadBatch {
                encrypted_docs: s
                    .index
                    .doc_store
                    .iter()
                    .map(|(id, ct)| crate::corpus::EncryptedDoc {
                        doc_id: id.clone(),
                        ciphertext: ct.clone(),
                    })
                    .collect(),
                postings: s.index.postings.clone(),
            }
        }))
        .unwrap();
        svc.cluster(2, 1).unwrap();
        let reopened = CloudService::open(dir.path()).unwrap();
        let t = tokenize_term("tulip", &key.token_key()).unwrap();
        assert_eq!(
            svc.search(&[t], &[0, 1]).unwrap(),
            reopened.search(&[t], &[0, 1]).unwrap()
        );
    }
}
