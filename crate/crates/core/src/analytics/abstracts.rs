use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::history::SearchRecord;
use super::markov::{build_markov, DEFAULT_EPS, DEFAULT_MAX_ITER};
use super::stats::{avg_query_similarity, ClusterStats, RadiusPolicy};
use crate::corpus::{TermToken, Vocabulary};
use crate::semantics::{term_similarity, SimilarityProvider};
use crate::{ClusterId, Error, Result};

pub const ABSTRACTS_VERSION: u32 = 1;
/// Initial abstract size.
pub const DEFAULT_INIT_TERMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractEntry {
    pub term: String,
    pub weight: f64,
    pub hits: u32,
}

/// Plaintext sample of one cluster, kept on the edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abstract {
    pub cluster_id: ClusterId,
    pub entries: Vec<AbstractEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<ClusterStats>,
}

impl Abstract {
    pub fn new(cluster_id: ClusterId) -> Self {
        Self {
            cluster_id,
            entries: Vec::new(),
            stats: None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.iter().any(|e| e.term == term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.term.as_str())
    }
}

/// Seeds every cluster with its `n` tokens of largest document count, named
/// by their plaintext. Ties go to the lexicographically smaller term; tokens
/// without a known plaintext are skipped.
pub fn init_abstracts(
    cluster_doc_assoc: &BTreeMap<ClusterId, Vec<(TermToken, usize)>>,
    n: usize,
    seed_terms: &Vocabulary,
) -> Vec<Abstract> {
    let weight = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    cluster_doc_assoc
        .iter()
        .map(|(id, tokens)| {
            let mut named: Vec<(&str, usize)> = tokens
                .iter()
                .filter_map(|(t, c)| match seed_terms.get(t) {
                    Some(term) => Some((term, *c)),
                    None => {
                        tracing::warn!(cluster = id, token = %t, "no plaintext for token, skipped");
                        None
                    }
                })
                .collect();
            named.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            named.dedup_by(|a, b| a.0 == b.0);
            let entries = named
                .into_iter()
                .take(n)
                .map(|(term, _)| AbstractEntry {
                    term: term.to_string(),
                    weight,
                    hits: 0,
                })
                .collect();
            Abstract {
                cluster_id: *id,
                entries,
                stats: None,
            }
        })
        .collect()
}

/// Hit counts per `(term, cluster)`.
pub type TermClusterHits = HashMap<(String, ClusterId), u32>;

/// Counts, for each term, how many records sent it to each cluster.
pub fn term_cluster_hits(history: &[SearchRecord]) -> TermClusterHits {
    let mut hits = TermClusterHits::new();
    for r in history {
        for c in &r.hit_clusters {
            for t in r.terms_for(*c) {
                *hits.entry((t.to_string(), *c)).or_default() += 1;
            }
        }
    }
    hits
}

/// Index into `abstracts` of the abstract whose members are on average most
/// similar to `term`. Ties: more hits for `(term, cluster)`, then lower id.
/// Returns `None` only when `abstracts` is empty.
pub fn select_abstract(
    term: &str,
    abstracts: &[Abstract],
    hits: &TermClusterHits,
    p: &SimilarityProvider,
) -> Option<usize> {
    let score = |a: &Abstract| -> f64 {
        if a.is_empty() {
            return 0.0;
        }
        a.terms().map(|t| term_similarity(p, term, t)).sum::<f64>() / a.len() as f64
    };
    let hit = |a: &Abstract| {
        hits.get(&(term.to_string(), a.cluster_id))
            .copied()
            .unwrap_or(0)
    };
    abstracts
        .iter()
        .enumerate()
        .map(|(i, a)| (i, score(a), hit(a), a.cluster_id))
        .max_by(|x, y| x.1.total_cmp(&y.1).then(x.2.cmp(&y.2)).then(y.3.cmp(&x.3)))
        .map(|(i, ..)| i)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "old_term", rename_all = "snake_case")]
pub enum Decision {
    Added,
    Replaced(String),
    Discarded,
}

/// Adds `term` when it is farther than `sr` from every member; otherwise it
/// competes with its most similar member and replaces it only with a strictly
/// larger weight. A term already present just has its weight and hits
/// refreshed.
pub fn integrate_term(
    term: &str,
    weight: f64,
    hits: u32,
    abstract_: &mut Abstract,
    sr: f64,
    p: &SimilarityProvider,
) -> Decision {
    if let Some(e) = abstract_.entries.iter_mut().find(|e| e.term == term) {
        e.weight = weight;
        e.hits = hits;
        return Decision::Discarded;
    }
    let closest = abstract_
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (i, term_similarity(p, term, &e.term)))
        .max_by(|a, b| {
            a.1.total_cmp(&b.1).then_with(|| {
                abstract_.entries[b.0]
                    .term
                    .cmp(&abstract_.entries[a.0].term)
            })
        });
    let entry = AbstractEntry {
        term: term.to_string(),
        weight,
        hits,
    };
    match closest {
        Some((i, s)) if s >= sr => {
            if weight > abstract_.entries[i].weight {
                let old = std::mem::replace(&mut abstract_.entries[i], entry);
                Decision::Replaced(old.term)
            } else {
                Decision::Discarded
            }
        }
        _ => {
            abstract_.entries.push(entry);
            Decision::Added
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaintenanceConfig {
    pub policy: RadiusPolicy,
    /// Qualification threshold; `None` means `1/m` for an `m`-state chain.
    pub theta: Option<f64>,
    pub eps: f64,
    pub max_iter: usize,
    /// Upper bound on add/replace passes per run.
    pub max_passes: usize,
}

impl Default for MaintenanceConfig {
    fn default() -> Self {
        Self {
            policy: RadiusPolicy::EdgeBased,
            theta: None,
            eps: DEFAULT_EPS,
            max_iter: DEFAULT_MAX_ITER,
            max_passes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub source_cluster: ClusterId,
    pub target_cluster: ClusterId,
    pub term: String,
    pub weight: f64,
    #[serde(flatten)]
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceReport {
    pub abstracts: Vec<Abstract>,
    pub stats: Vec<ClusterStats>,
    pub decisions: Vec<DecisionLog>,
    pub passes: usize,
    pub non_converged: Vec<ClusterId>,
}

/// One offline maintenance run. Statistics are recomputed first so every
/// radius is current; then each cluster's chain yields qualified terms that
/// are routed to an abstract and added, swapped in or dropped. Passes repeat
/// until nothing changes so that a re-run on the same history is a no-op.
///
/// `cluster_sizes` gives γ for every cluster and defines the cluster set.
pub fn maintain_abstracts(
    history: &[SearchRecord],
    abstracts: &[Abstract],
    cluster_sizes: &BTreeMap<ClusterId, usize>,
    p: &SimilarityProvider,
    cfg: &MaintenanceConfig,
) -> Result<MaintenanceReport> {
    let mut out: Vec<Abstract> = abstracts.to_vec();
    let unchanged = |out: Vec<Abstract>| MaintenanceReport {
        abstracts: out,
        stats: Vec::new(),
        decisions: Vec::new(),
        passes: 0,
        non_converged: Vec::new(),
    };
    if history.is_empty() || cluster_sizes.is_empty() {
        return Ok(unchanged(out));
    }
    for a in &out {
        if !cluster_sizes.contains_key(&a.cluster_id) {
            return Err(Error::UnknownCluster(a.cluster_id));
        }
    }

    let mut q: BTreeMap<ClusterId, Vec<Vec<String>>> =
        cluster_sizes.keys().map(|c| (*c, Vec::new())).collect();
    for r in history {
        for c in &r.hit_clusters {
            let terms: Vec<String> = r.terms_for(*c).map(str::to_string).collect();
            if let Some(list) = q.get_mut(c) {
                if !terms.is_empty() {
                    list.push(terms);
                }
            }
        }
    }
    let total: usize = q.values().map(Vec::len).sum();
    if total == 0 {
        return Ok(unchanged(out));
    }
    let q_bar = total as f64 / cluster_sizes.len() as f64;
    let mut stats: BTreeMap<ClusterId, ClusterStats> = BTreeMap::new();
    for (c, queries) in &q {
        let delta_bar = if queries.is_empty() {
            0.0
        } else {
            avg_query_similarity(queries, p)
        };
        let gamma = cluster_sizes[c].max(1);
        stats.insert(
            *c,
            ClusterStats::compute(*c, queries.len(), q_bar, delta_bar, gamma, cfg.policy)?,
        );
    }
    for a in &mut out {
        a.stats = stats.get(&a.cluster_id).cloned();
    }
    let stats_list: Vec<ClusterStats> = stats.values().cloned().collect();
    if !cfg.policy.maintains() || out.is_empty() {
        return Ok(MaintenanceReport {
            stats: stats_list,
            ..unchanged(out)
        });
    }

    let mut qualified: Vec<(ClusterId, Vec<(String, f64)>)> = Vec::new();
    let mut non_converged = Vec::new();
    for (c, queries) in &q {
        if queries.is_empty() {
            continue;
        }
        let mut model = match build_markov(history, *c) {
            Ok(m) => m,
            Err(Error::NoHistory(_)) => continue,
            Err(e) => return Err(e),
        };
        let conv = model.converge(cfg.eps, cfg.max_iter);
        if !conv.converged {
            non_converged.push(*c);
        }
        model.state_prob = conv.state_prob;
        let theta = cfg.theta.unwrap_or(1.0 / model.len() as f64);
        qualified.push((*c, model.qualified_terms(theta)));
    }

    let hits = term_cluster_hits(history);
    let mut decisions = Vec::new();
    let mut passes = 0;
    while passes < cfg.max_passes {
        passes += 1;
        let before = out.clone();
        for (source, terms) in &qualified {
            for (term, weight) in terms {
                let Some(i) = select_abstract(term, &out, &hits, p) else {
                    continue;
                };
                let target = out[i].cluster_id;
                let h = hits.get(&(term.clone(), target)).copied().unwrap_or(0);
                let sr = stats[&target].sr;
                let decision = integrate_term(term, *weight, h, &mut out[i], sr, p);
                decisions.push(DecisionLog {
                    source_cluster: *source,
                    target_cluster: target,
                    term: term.clone(),
                    weight: *weight,
                    decision,
                });
            }
        }
        if out == before {
            break;
        }
    }
    Ok(MaintenanceReport {
        abstracts: out,
        stats: stats_list,
        decisions,
        passes,
        non_converged,
    })
}

/// Total entries across all abstracts.
pub fn abstract_term_count(abstracts: &[Abstract]) -> usize {
    abstracts.iter().map(Abstract::len).sum()
}

#[derive(Debug, Serialize, Deserialize)]
struct AbstractsFile {
    version: u32,
    clusters: Vec<Abstract>,
}

pub fn save_abstracts(abstracts: &[Abstract], path: &Path) -> Result<()> {
    let file = AbstractsFile {
        version: ABSTRACTS_VERSION,
        clusters: abstracts.to_vec(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_vec_pretty(&file)?)?;
    Ok(())
}

pub fn load_abstracts(path: &Path) -> Result<Vec<Abstract>> {
    let file: AbstractsFile = serde_json::from_slice(&fs::read(path)?)?;
    if file.version != ABSTRACTS_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            msg: format!("abstracts version {} not supported", file.version),
        });
    }
    Ok(file.clusters)
}

#[cfg(test)]
mod tests {
    use super::super::history::record;
    use super::*;
    use crate::semantics::fixtures::zoo;
    use crate::semantics::Taxonomy;

    fn abs(id: ClusterId, terms: &[(&str, f64)]) -> Abstract {
        Abstract {
            cluster_id: id,
            entries: terms
                .iter()
                .map(|(t, w)| AbstractEntry {
                    term: t.to_string(),
                    weight: *w,
                    hits: 0,
                })
                .collect(),
            stats: None,
        }
    }

    fn tok(n: u8) -> TermToken {
        TermToken::from_bytes([n; 32])
    }

    #[test]
    fn init_takes_top_n_by_doc_count() {
        let vocab = Vocabulary((1..=5).map(|i| (tok(i), format!("t{i}"))).collect());
        let assoc = BTreeMap::from([
            (0, vec![(tok(1), 3), (tok(2), 9), (tok(3), 3)]),
            (1, vec![(tok(4), 1), (tok(5), 1)]),
        ]);
        let a = init_abstracts(&assoc, 2, &vocab);
        assert_eq!(a[0].terms().collect::<Vec<_>>(), ["t2", "t1"]);
        assert_eq!(a[1].terms().collect::<Vec<_>>(), ["t4", "t5"]);
        assert!(a
            .iter()
            .flat_map(|a| &a.entries)
            .all(|e| e.weight == 0.5 && e.hits == 0));
        let big = init_abstracts(&assoc, 10, &vocab);
        assert_eq!(big[1].len(), 2);
    }

    #[test]
    fn init_exactly_n_of_fifty() {
        let vocab = Vocabulary((0..50).map(|i| (tok(i), format!("w{i:02}"))).collect());
        let assoc = BTreeMap::from([(0, (0..50).map(|i| (tok(i), i as usize)).collect())]);
        let a = init_abstracts(&assoc, 10, &vocab);
        assert_eq!(a[0].len(), 10);
        assert_eq!(a[0].entries[0].term, "w49");
    }

    #[test]
    fn select_by_mean_similarity() {
        // puppy vs {dog, cat}: 2/3 each; vs {engine}: 1/3
        let p = zoo();
        let abstracts = vec![
            abs(0, &[("dog", 0.1), ("cat", 0.1)]),
            abs(1, &[("engine", 0.1)]),
        ];
        assert_eq!(
            select_abstract("puppy", &abstracts, &HashMap::new(), &p),
            Some(0)
        );
    }

    #[test]
    fn select_tie_on_hits_then_id() {
        let p = zoo();
        let abstracts = vec![abs(0, &[("dog", 0.1)]), abs(1, &[("engine", 0.1)])];
        let hits = HashMap::from([(("zzz".to_string(), 1), 3), (("zzz".to_string(), 0), 1)]);
        assert_eq!(select_abstract("zzz", &abstracts, &hits, &p), Some(1));
        assert_eq!(
            select_abstract("zzz", &abstracts, &HashMap::new(), &p),
            Some(0)
        );
        assert_eq!(
            select_abstract("zzz", &abstracts[1..], &HashMap::new(), &p),
            Some(0)
        );
        assert_eq!(select_abstract("zzz", &[], &HashMap::new(), &p), None);
    }

    #[test]
    fn empty_abstract_scores_zero() {
        let p = zoo();
        let abstracts = vec![Abstract::new(0), abs(1, &[("dog", 0.1)])];
        assert_eq!(
            select_abstract("cat", &abstracts, &HashMap::new(), &p),
            Some(1)
        );
    }

    fn viewer_taxonomy() -> SimilarityProvider {
        // viewer and the photo terms share "optical" (depth 2) at depth 3
        // → 2*2/(3+3) = 0.667 ≥ 0.38; frozen lives under another root.
        SimilarityProvider::taxonomy(
            Taxonomy::parse(
                "optical\t-\nimage\toptical\nviewer\timage\nphoto\timage\nportrait\timage\nmirror\timage\n\
                 weather\t-\nfrozen\tweather\n",
            )
            .unwrap(),
        )
    }

    #[test]
    fn add_outside_radius() {
        let p = viewer_taxonomy();
        let mut a = abs(0, &[("viewer", 0.3)]);
        assert_eq!(
            integrate_term("frozen", 0.2, 1, &mut a, 0.38, &p),
            Decision::Added
        );
        assert_eq!(a.terms().collect::<Vec<_>>(), ["viewer", "frozen"]);
    }

    #[test]
    fn replace_and_discard_inside_radius() {
        let p = viewer_taxonomy();
        let mut a = abs(0, &[("viewer", 0.3)]);
        assert_eq!(
            integrate_term("photo", 0.1, 0, &mut a, 0.38, &p),
            Decision::Discarded
        );
        assert_eq!(
            integrate_term("photo", 0.8, 0, &mut a, 0.38, &p),
            Decision::Replaced("viewer".into())
        );
        assert_eq!(a.terms().collect::<Vec<_>>(), ["photo"]);
    }

    #[test]
    fn equal_weight_does_not_replace() {
        let p = viewer_taxonomy();
        let mut a = abs(0, &[("viewer", 0.3)]);
        assert_eq!(
            integrate_term("photo", 0.3, 0, &mut a, 0.38, &p),
            Decision::Discarded
        );
    }

    #[test]
    fn present_term_refreshes_weight() {
        let p = viewer_taxonomy();
        let mut a = abs(0, &[("viewer", 0.3)]);
        assert_eq!(
            integrate_term("viewer", 0.6, 4, &mut a, 0.38, &p),
            Decision::Discarded
        );
        assert_eq!(
            a.entries,
            vec![AbstractEntry {
                term: "viewer".into(),
                weight: 0.6,
                hits: 4
            }]
        );
    }

    #[test]
    fn empty_abstract_always_adds() {
        let p = viewer_taxonomy();
        let mut a = Abstract::new(0);
        assert_eq!(
            integrate_term("photo", 0.01, 0, &mut a, 0.05, &p),
            Decision::Added
        );
    }

    #[test]
    fn competition_picks_most_similar_then_lexicographic() {
        let p = zoo();
        // puppy is equally similar to dog and cat; "cat" wins the tie
        let mut a = abs(0, &[("dog", 0.1), ("cat", 0.1)]);
        assert_eq!(
            integrate_term("puppy", 0.5, 0, &mut a, 0.5, &p),
            Decision::Replaced("cat".into())
        );
    }

    fn sizes() -> BTreeMap<ClusterId, usize> {
        BTreeMap::from([(0, 100), (1, 100)])
    }

    #[test]
    fn empty_history_is_a_no_op() {
        let p = zoo();
        let a = vec![abs(0, &[("dog", 0.1)]), abs(1, &[("engine", 0.1)])];
        let r = maintain_abstracts(&[], &a, &sizes(), &p, &MaintenanceConfig::default()).unwrap();
        assert_eq!(r.abstracts, a);
        assert!(r.decisions.is_empty());
    }

    #[test]
    fn dominant_terms_land_in_their_clusters() {
        let p = zoo();
        let a = vec![abs(0, &[("dog", 0.1)]), abs(1, &[("engine", 0.1)])];
        let mut h = Vec::new();
        for i in 0..6 {
            h.push(record(&format!("a{i}"), i, &["turbine", "piston"], &[1]));
            h.push(record(&format!("b{i}"), i, &["leash", "kennel"], &[0]));
        }
        h.push(record("c", 99, &["piston"], &[1]));
        let r = maintain_abstracts(&h, &a, &sizes(), &p, &MaintenanceConfig::default()).unwrap();
        assert!(r.abstracts[0].contains("kennel"));
        assert!(r.abstracts[1].contains("piston"));
        assert!(!r.abstracts[0].contains("piston"));
        assert_eq!(r.stats.len(), 2);

        let again = maintain_abstracts(
            &h,
            &r.abstracts,
            &sizes(),
            &p,
            &MaintenanceConfig::default(),
        )
        .unwrap();
        assert_eq!(again.abstracts, r.abstracts);
    }

    #[test]
    fn static_policy_only_reports() {
        let p = zoo();
        let a = vec![abs(0, &[("dog", 0.1)]), abs(1, &[("engine", 0.1)])];
        let h = vec![record("s", 0, &["kennel"], &[0])];
        let cfg = MaintenanceConfig {
            policy: RadiusPolicy::StaticS3bd,
            ..Default::default()
        };
        let r = maintain_abstracts(&h, &a, &sizes(), &p, &cfg).unwrap();
        assert_eq!(
            r.abstracts.iter().map(Abstract::len).collect::<Vec<_>>(),
            [1, 1]
        );
        assert_eq!(r.stats[0].q, 1);
        assert_eq!(r.stats[1].sigma, -1.0);
    }

    #[test]
    fn abstracts_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abstracts.json");
        let mut a = vec![abs(0, &[("dog", 0.25)]), abs(1, &[])];
        a[0].stats =
            Some(ClusterStats::compute(0, 3, 2.0, 0.5, 10, RadiusPolicy::EdgeBased).unwrap());
        save_abstracts(&a, &path).unwrap();
        assert_eq!(load_abstracts(&path).unwrap(), a);
        fs::write(&path, r#"{"version":9,"clusters":[]}"#).unwrap();
        assert!(matches!(load_abstracts(&path), Err(Error::Version { .. })));
    }
}
