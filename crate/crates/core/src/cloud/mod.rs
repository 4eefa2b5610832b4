//! Cloud tier: clusters encrypted tokens by co-occurrence and searches a
//! pruned subset of clusters. Sees tokens and ciphertext only.

mod cluster;
mod index;
mod search;
mod service;
mod store;

pub use cluster::{
    cluster_terms, cluster_terms_counting_orphans, refine_clusters, select_centroids, Cluster,
    ClusterSet,
};
pub use index::{semantic_relatedness, EncryptedIndex};
pub use search::{search_clusters, RankedResult, ScoredDoc};
pub use service::{
    CloudService, ClusterInfo, ClusterSummary, SearchResponse, TokenDocCount, UploadSummary,
};
pub use store::{CloudState, INDEX_MAGIC, INDEX_VERSION};

/// Default number of clusters for desk-sized corpora.
pub const DEFAULT_K: usize = 10;
