use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::semantics::{term_similarity, SimilarityProvider};
use crate::{ClusterId, Error, Result};

pub const SR_MIN: f64 = 0.05;
pub const SR_MAX: f64 = 0.95;
/// Lower bound applied to the β and SR denominators before inversion.
pub const MIN_DENOMINATOR: f64 = 0.1;

/// `(q - q̄) / q̄`.
pub fn cluster_popularity(q: usize, q_bar: f64) -> Result<f64> {
    if q_bar <= 0.0 {
        return Err(Error::NoQueryTraffic);
    }
    Ok((q as f64 - q_bar) / q_bar)
}

/// `1 / max(δ̄ + σ, 0.1)`.
pub fn user_interest(delta_bar: f64, sigma: f64) -> f64 {
    1.0 / (delta_bar + sigma).max(MIN_DENOMINATOR)
}

/// A clamped radius together with the unclamped denominator it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticRadius {
    pub value: f64,
    pub denominator: f64,
}

impl SemanticRadius {
    fn from_denominator(denominator: f64) -> Self {
        let value = (1.0 / denominator.max(MIN_DENOMINATOR)).clamp(SR_MIN, SR_MAX);
        Self { value, denominator }
    }

    /// The unclamped `1 / denominator`.
    pub fn raw(&self) -> f64 {
        1.0 / self.denominator
    }
}

/// `1 / (δ̄ + σ + log10 γ)`, denominator floored at 0.1, result clamped to
/// `[SR_MIN, SR_MAX]`.
pub fn semantic_radius(delta_bar: f64, sigma: f64, gamma: usize) -> SemanticRadius {
    SemanticRadius::from_denominator(delta_bar + sigma + log_gamma(gamma))
}

fn log_gamma(gamma: usize) -> f64 {
    (gamma.max(1) as f64).log10()
}

/// How a cluster's semantic radius is derived during maintenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusPolicy {
    /// Abstracts stay at their initial terms.
    StaticS3bd,
    /// `clamp(β)`.
    BetaOnly,
    /// `1 / (δ̄ + log10 γ)`.
    GammaDelta,
    /// `1 / (δ̄ + σ + log10 γ)`.
    EdgeBased,
}

impl RadiusPolicy {
    pub const ALL: [RadiusPolicy; 4] = [
        RadiusPolicy::StaticS3bd,
        RadiusPolicy::BetaOnly,
        RadiusPolicy::GammaDelta,
        RadiusPolicy::EdgeBased,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RadiusPolicy::StaticS3bd => "static_s3bd",
            RadiusPolicy::BetaOnly => "beta_only",
            RadiusPolicy::GammaDelta => "gamma_delta",
            RadiusPolicy::EdgeBased => "edge_based",
        }
    }

    pub fn maintains(&self) -> bool {
        *self != RadiusPolicy::StaticS3bd
    }

    /// Radius under this policy. The static policy reports the edge-based
    /// value for comparison, though it never uses it.
    pub fn radius(&self, delta_bar: f64, sigma: f64, gamma: usize) -> SemanticRadius {
        match self {
            RadiusPolicy::StaticS3bd | RadiusPolicy::EdgeBased => {
                semantic_radius(delta_bar, sigma, gamma)
            }
            RadiusPolicy::BetaOnly => SemanticRadius::from_denominator(delta_bar + sigma),
            RadiusPolicy::GammaDelta => {
                SemanticRadius::from_denominator(delta_bar + log_gamma(gamma))
            }
        }
    }
}

impl fmt::Display for RadiusPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RadiusPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RadiusPolicy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster_id: ClusterId,
    pub q: usize,
    pub q_bar: f64,
    pub sigma: f64,
    pub delta_bar: f64,
    pub beta: f64,
    pub gamma: usize,
    pub sr: f64,
    pub sr_denominator: f64,
}

impl ClusterStats {
    pub fn compute(
        cluster_id: ClusterId,
        q: usize,
        q_bar: f64,
        delta_bar: f64,
        gamma: usize,
        policy: RadiusPolicy,
    ) -> Result<Self> {
        let sigma = cluster_popularity(q, q_bar)?;
        let sr = policy.radius(delta_bar, sigma, gamma);
        Ok(Self {
            cluster_id,
            q,
            q_bar,
            sigma,
            delta_bar,
            beta: user_interest(delta_bar, sigma),
            gamma,
            sr: sr.value,
            sr_denominator: sr.denominator,
        })
    }
}

/// Mean query-to-query similarity over all unordered pairs; 1.0 for a single
/// query and 0.0 for none.
pub fn avg_query_similarity(queries: &[Vec<String>], p: &SimilarityProvider) -> f64 {
    match queries.len() {
        0 => return 0.0,
        1 => return 1.0,
        _ => {}
    }
    let mut memo = SimilarityMemo::new(p);
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..queries.len() {
        for j in i + 1..queries.len() {
            total += memo.query_similarity(&queries[i], &queries[j]);
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Each term of the shorter query is matched with its most similar term in
/// the other; the result is the mean of those best matches. Equal-length
/// queries average both directions so the measure stays symmetric.
pub fn query_similarity(a: &[String], b: &[String], p: &SimilarityProvider) -> f64 {
    SimilarityMemo::new(p).query_similarity(a, b)
}

struct SimilarityMemo<'a> {
    p: &'a SimilarityProvider,
    cache: HashMap<(String, String), f64>,
}

impl<'a> SimilarityMemo<'a> {
    fn new(p: &'a SimilarityProvider) -> Self {
        Self {
            p,
            cache: HashMap::new(),
        }
    }

    fn sim(&mut self, a: &str, b: &str) -> f64 {
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        if let Some(s) = self.cache.get(&key) {
            return *s;
        }
        let s = term_similarity(self.p, a, b);
        self.cache.insert(key, s);
        s
    }

    fn directed(&mut self, from: &[String], to: &[String]) -> f64 {
        let total: f64 = from
            .iter()
            .map(|t| to.iter().map(|u| self.sim(t, u)).fold(0.0, f64::max))
            .sum();
        total / from.len() as f64
    }

    fn query_similarity(&mut self, a: &[String], b: &[String]) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        match a.len().cmp(&b.len()) {
            std::cmp::Ordering::Less => self.directed(a, b),
            std::cmp::Ordering::Greater => self.directed(b, a),
            std::cmp::Ordering::Equal => (self.directed(a, b) + self.directed(b, a)) / 2.0,
        }
    }
}
