//! Offline edge analytics: search history, per-cluster Markov chains, cluster
//! statistics and abstract maintenance.

mod abstracts;
mod history;
mod markov;
mod stats;

pub use abstracts::{
    abstract_term_count, init_abstracts, integrate_term, load_abstracts, maintain_abstracts,
    save_abstracts, select_abstract, term_cluster_hits, Abstract, AbstractEntry, Decision,
    DecisionLog, MaintenanceConfig, MaintenanceReport, TermClusterHits, ABSTRACTS_VERSION,
    DEFAULT_INIT_TERMS,
};
pub use history::{read_history, sessions, HistoryLog, SearchRecord, SESSION_GAP_MS};
pub use markov::{
    build_markov, step_vector, Convergence, MarkovModel, DEFAULT_EPS, DEFAULT_MAX_ITER,
};
pub use stats::{
    avg_query_similarity, cluster_popularity, query_similarity, semantic_radius, user_interest,
    ClusterStats, RadiusPolicy, SemanticRadius, MIN_DENOMINATOR, SR_MAX, SR_MIN,
};
