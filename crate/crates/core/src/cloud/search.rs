use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::cluster::ClusterSet;
use super::index::EncryptedIndex;
use crate::corpus::TermToken;
use crate::{ClusterId, DocId, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: DocId,
    pub score: f64,
}

/// Documents in descending score order, ties by doc_id ascending.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub entries: Vec<ScoredDoc>,
}

impl RankedResult {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> BTreeSet<DocId> {
        self.entries.iter().map(|e| e.doc_id.clone()).collect()
    }
}

/// Scores documents against the query tokens that belong to one of the named
/// clusters. Each matched token adds `1 / |postings|` to its documents.
pub fn search_clusters(
    query_tokens: &[TermToken],
    cluster_ids: &[ClusterId],
    cs: &ClusterSet,
    idx: &EncryptedIndex,
) -> Result<RankedResult> {
    if query_tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut allowed = BTreeSet::new();
    for id in cluster_ids {
        cs.get(*id)?;
        allowed.insert(*id);
    }
    let unique: BTreeSet<&TermToken> = query_tokens.iter().collect();
    let mut scores: HashMap<&DocId, f64> = HashMap::new();
    for token in unique {
        if !cs.cluster_of(token).is_some_and(|c| allowed.contains(&c)) {
            continue;
        }
        let Some(docs) = idx.postings.get(token) else {
            continue;
        };
        let w = 1.0 / docs.len() as f64;
        for d in docs {
            *scores.entry(d).or_default() += w;
        }
    }
    let mut entries: Vec<ScoredDoc> = scores
        .into_iter()
        .map(|(d, score)| ScoredDoc {
            doc_id: d.clone(),
            score,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    Ok(RankedResult { entries })
}
