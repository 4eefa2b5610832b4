//! Online edge tier: turns a plaintext query into tokens for the chosen
//! clusters and records what users search for.

mod engine;
mod prune;
mod query;

pub use engine::{CloudBackend, EdgeConfig, EdgeEngine, SearchOutcome};
pub use prune::{abstract_score, prune, top_k, PruneDecision, DEFAULT_PRUNE_K};
pub use query::{process_query, ProcessedQuery, DEFAULT_EXPAND_N};
