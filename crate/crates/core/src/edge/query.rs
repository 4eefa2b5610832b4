use serde::{Deserialize, Serialize};

use crate::corpus::text::analyze;
use crate::semantics::{expand_query, SimilarityProvider};
use crate::{Error, Result};

/// Default number of expansions per query term.
pub const DEFAULT_EXPAND_N: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedQuery {
    pub raw: String,
    /// Stemmed user terms, deduplicated in query order.
    pub terms: Vec<String>,
    /// `terms` followed by their expansions.
    pub expanded: Vec<String>,
    pub session_id: String,
}

pub fn process_query(
    raw: &str,
    session_id: &str,
    p: &SimilarityProvider,
    expand_n: usize,
) -> Result<ProcessedQuery> {
    if raw.trim().is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut terms: Vec<String> = Vec::new();
    for t in analyze(raw) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    if terms.is_empty() {
        return Err(Error::QueryReducedToEmpty);
    }
    let expanded = expand_query(&terms, expand_n, p);
    Ok(ProcessedQuery {
        raw: raw.to_string(),
        terms,
        expanded,
        session_id: session_id.to_string(),
    })
}
