use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::history::{sessions, SearchRecord};
use crate::{ClusterId, Error, Result};

pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Search-term chain for one cluster. `transition` is row-stochastic and
/// indexed like `states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub cluster_id: ClusterId,
    pub states: Vec<String>,
    pub transition: Vec<Vec<f64>>,
    pub state_prob: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub state_prob: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Builds the chain from the records that hit `cluster_id`. Consecutive terms
/// within a session are transitions; a session's last term has none, and
/// rows without transitions become uniform. The initial vector is each
/// term's share of all searched terms.
pub fn build_markov(history: &[SearchRecord], cluster_id: ClusterId) -> Result<MarkovModel> {
    let relevant: Vec<&SearchRecord> = history.iter().filter(|r| r.hits(cluster_id)).collect();
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    for session in sessions(&relevant) {
        let seq: Vec<&str> = session
            .iter()
            .flat_map(|r| r.terms_for(cluster_id))
            .collect();
        for t in &seq {
            *freq.entry(t).or_default() += 1;
        }
        pairs.extend(seq.windows(2).map(|w| (w[0], w[1])));
    }
    if freq.is_empty() {
        return Err(Error::NoHistory(cluster_id));
    }
    let states: Vec<String> = freq.keys().map(|s| s.to_string()).collect();
    let pos: BTreeMap<&str, usize> = freq.keys().enumerate().map(|(i, s)| (*s, i)).collect();
    let m = states.len();
    let mut counts = vec![vec![0.0; m]; m];
    for (a, b) in pairs {
        counts[pos[a]][pos[b]] += 1.0;
    }
    let transition = counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total == 0.0 {
                vec![1.0 / m as f64; m]
            } else {
                row.into_iter().map(|c| c / total).collect()
            }
        })
        .collect();
    let total: usize = freq.values().sum();
    let state_prob = freq.values().map(|f| *f as f64 / total as f64).collect();
    Ok(MarkovModel {
        cluster_id,
        states,
        transition,
        state_prob,
    })
}

impl MarkovModel {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// One step `v · P`.
    pub fn step(&self) -> Vec<f64> {
        step_vector(&self.state_prob, &self.transition)
    }

    /// Iterates [`MarkovModel::step`] until successive vectors are within `eps`
    /// in L1 or `max_iter` steps have run.
    pub fn converge(&self, eps: f64, max_iter: usize) -> Convergence {
        let mut v = self.state_prob.clone();
        for i in 1..=max_iter {
            let next = step_vector(&v, &self.transition);
            let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            if diff < eps {
                return Convergence {
                    state_prob: v,
                    iterations: i,
                    converged: true,
                };
            }
        }
        tracing::debug!(
            cluster = self.cluster_id,
            max_iter,
            "markov chain did not converge"
        );
        Convergence {
            state_prob: v,
            iterations: max_iter,
            converged: false,
        }
    }

    /// Terms whose probability is strictly above `theta`, weight descending
    /// (ties by term).
    pub fn qualified_terms(&self, theta: f64) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .states
            .iter()
            .zip(&self.state_prob)
            .filter(|(_, p)| **p > theta)
            .map(|(t, p)| (t.clone(), *p))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

pub fn step_vector(v: &[f64], p: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (vk, row) in v.iter().zip(p) {
        if *vk == 0.0 {
            continue;
        }
        for (o, pkj) in out.iter_mut().zip(row) {
            *o += vk * pkj;
        }
    }
    out
}
