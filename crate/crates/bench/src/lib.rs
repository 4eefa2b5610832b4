//! Benchmark harness and fixture tooling for the pruned encrypted search
//! stack.

pub mod fixture;
pub mod harness;
pub mod queries;

pub use fixture::{generate_fixture, Fixture, FixtureSpec, FIXTURE_SEED};
pub use harness::{
    bench_key, labelled_split, prepare, run_benchmark, run_in_process, run_over_http, run_policy,
    token_clusters, BenchConfig, BenchReport, PolicyReport, Prepared,
};
pub use queries::{
    assign_relevance, split_benchmark, synthesize_queries, BenchmarkQuery, PER_DOC_KEYWORDS,
    PER_QUERY, TRAIN_FRACTION,
};
