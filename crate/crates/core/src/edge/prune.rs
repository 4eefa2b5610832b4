use serde::{Deserialize, Serialize};

use super::query::ProcessedQuery;
use crate::analytics::Abstract;
use crate::semantics::{term_similarity, SimilarityProvider};
use crate::ClusterId;

/// Default number of clusters searched per query.
pub const DEFAULT_PRUNE_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneDecision {
    /// Score per abstract, in abstract order.
    pub scored: Vec<(ClusterId, f64)>,
    /// The `k` best clusters, best first.
    pub chosen: Vec<ClusterId>,
}

/// Mean over the query's expanded terms of the best similarity to any
/// abstract entry. An exact string match counts 1.0.
pub fn abstract_score(terms: &[String], a: &Abstract, p: &SimilarityProvider) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    let total: f64 = terms
        .iter()
        .map(|t| {
            a.terms()
                .map(|e| term_similarity(p, t, e))
                .fold(0.0, f64::max)
        })
        .sum();
    total / terms.len() as f64
}

/// Keeps the `k` highest-scoring clusters; ties go to the lower id.
pub fn prune(
    q: &ProcessedQuery,
    abstracts: &[Abstract],
    k: usize,
    p: &SimilarityProvider,
) -> PruneDecision {
    let scored: Vec<(ClusterId, f64)> = abstracts
        .iter()
        .map(|a| (a.cluster_id, abstract_score(&q.expanded, a, p)))
        .collect();
    PruneDecision {
        chosen: top_k(&scored, k),
        scored,
    }
}

pub fn top_k(scored: &[(ClusterId, f64)], k: usize) -> Vec<ClusterId> {
    let mut order: Vec<&(ClusterId, f64)> = scored.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().take(k).map(|(c, _)| *c).collect()
}
