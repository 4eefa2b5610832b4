use std::collections::{BTreeSet, HashMap};

use prunesearch_core::corpus::{extract_keywords, tokenize_term, Document, TermToken, TokenKey};
use prunesearch_core::{ClusterId, DocId, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PER_DOC_KEYWORDS: usize = 15;
pub const PER_QUERY: usize = 3;
pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub text: String,
    pub keywords: Vec<String>,
    pub source_doc: DocId,
    /// Clusters holding at least one of the keywords' tokens; filled in once
    /// the index is clustered.
    #[serde(default)]
    pub relevant_clusters: BTreeSet<ClusterId>,
}

/// Extracts `per_doc` keywords from every document (or from a seeded subset
/// of `subset` documents) and groups them, in extraction order, into queries
/// of `per_query` keywords. Trailing keywords that do not fill a group are
/// dropped; documents with fewer than `per_query` keywords are skipped.
pub fn synthesize_queries(
    docs: &[Document],
    per_doc: usize,
    per_query: usize,
    seed: u64,
    subset: Option<usize>,
) -> Vec<BenchmarkQuery> {
    let mut chosen: Vec<&Document> = docs.iter().collect();
    if let Some(n) = subset.filter(|n| *n < docs.len()) {
        chosen.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        chosen.truncate(n);
        chosen.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    }
    let mut out = Vec::new();
    for doc in chosen {
        let kws: Vec<String> = extract_keywords(doc, per_doc)
            .into_iter()
            .map(|k| k.term)
            .collect();
        if kws.len() < per_query.max(1) {
            tracing::warn!(doc = %doc.doc_id, keywords = kws.len(), "too few keywords, skipped");
            continue;
        }
        for group in kws.chunks_exact(per_query.max(1)) {
            out.push(BenchmarkQuery {
                text: group.join(" "),
                keywords: group.to_vec(),
                source_doc: doc.doc_id.clone(),
                relevant_clusters: BTreeSet::new(),
            });
        }
    }
    out
}

/// Seeded shuffle, then the first `round(n * train_fraction)` queries train.
pub fn split_benchmark(
    queries: &[BenchmarkQuery],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<BenchmarkQuery>, Vec<BenchmarkQuery>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(prunesearch_core::Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut shuffled = queries.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (queries.len() as f64 * train_fraction).round() as usize;
    let test = shuffled.split_off(n_train);
    Ok((shuffled, test))
}

/// Fills `relevant_clusters` from a token-to-cluster map.
pub fn assign_relevance(
    queries: &mut [BenchmarkQuery],
    key: &TokenKey,
    clusters: &HashMap<TermToken, ClusterId>,
) -> Result<()> {
    for q in queries {
        q.relevant_clusters.clear();
        for kw in &q.keywords {
            if let Some(c) = clusters.get(&tokenize_term(kw, key)?) {
                q.relevant_clusters.insert(*c);
            }
        }
    }
    Ok(())
}
