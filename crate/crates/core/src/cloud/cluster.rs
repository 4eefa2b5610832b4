use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::index::{intersection_len, EncryptedIndex};
use crate::corpus::TermToken;
use crate::{ClusterId, DocId, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: ClusterId,
    pub centroid: TermToken,
    pub members: BTreeSet<TermToken>,
}

/// A partition of the token universe into `k` clusters with ids `0..k`.
#[derive(Debug, Clone)]
pub struct ClusterSet {
    clusters: Vec<Cluster>,
    membership: HashMap<TermToken, ClusterId>,
}

impl PartialEq for ClusterSet {
    fn eq(&self, other: &Self) -> bool {
        self.clusters == other.clusters
    }
}

impl Eq for ClusterSet {}

impl ClusterSet {
    /// Validates ids, centroid membership and disjointness.
    pub fn new(clusters: Vec<Cluster>) -> Result<Self> {
        let mut membership = HashMap::new();
        for (i, c) in clusters.iter().enumerate() {
            if c.cluster_id as usize != i {
                return Err(Error::InvalidArgument(format!(
                    "cluster at position {i} has id {}",
                    c.cluster_id
                )));
            }
            if !c.members.contains(&c.centroid) {
                return Err(Error::InvalidArgument(format!(
                    "centroid of cluster {i} is not a member"
                )));
            }
            for m in &c.members {
                if membership.insert(*m, c.cluster_id).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "token {m} is in more than one cluster"
                    )));
                }
            }
        }
        Ok(Self {
            clusters,
            membership,
        })
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn get(&self, id: ClusterId) -> Result<&Cluster> {
        self.clusters
            .get(id as usize)
            .ok_or(Error::UnknownCluster(id))
    }

    pub fn cluster_of(&self, token: &TermToken) -> Option<ClusterId> {
        self.membership.get(token).copied()
    }

    pub fn token_count(&self) -> usize {
        self.membership.len()
    }
}

/// Picks `k` centroid tokens.
///
/// Candidates are scanned by posting size (descending, token hex ascending).
/// A candidate's documents split into those not yet covered by an already
/// chosen centroid (`unique`) and those that are (`shared`); it becomes a
/// centroid when `unique > shared`. If fewer than `k` candidates qualify the
/// rest are filled by margin `unique - shared` (descending, hex ascending).
pub fn select_centroids(idx: &EncryptedIndex, k: usize) -> Result<Vec<TermToken>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > idx.token_count() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} indexed tokens",
            idx.token_count()
        )));
    }
    let mut order: Vec<(&TermToken, &BTreeSet<DocId>)> = idx.postings.iter().collect();
    order.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));

    let mut covered: HashSet<&DocId> = HashSet::new();
    let mut chosen: Vec<TermToken> = Vec::with_capacity(k);
    let mut chosen_set: HashSet<TermToken> = HashSet::new();
    for (token, docs) in &order {
        if chosen.len() == k {
            break;
        }
        let shared = docs.iter().filter(|d| covered.contains(d)).count();
        let unique = docs.len() - shared;
        if unique > shared {
            chosen.push(**token);
            chosen_set.insert(**token);
            covered.extend(docs.iter());
        }
    }
    if chosen.len() < k {
        let mut rest: Vec<(i64, TermToken)> = order
            .iter()
            .filter(|(t, _)| !chosen_set.contains(*t))
            .map(|(t, docs)| {
                let shared = docs.iter().filter(|d| covered.contains(d)).count() as i64;
                (docs.len() as i64 - 2 * shared, **t)
            })
            .collect();
        rest.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        chosen.extend(rest.into_iter().take(k - chosen.len()).map(|(_, t)| t));
    }
    Ok(chosen)
}

/// Single-pass assignment: each token joins the centroid it co-occurs with
/// most. Ties and tokens related to no centroid go to the lowest cluster id.
pub fn cluster_terms(idx: &EncryptedIndex, centroids: &[TermToken]) -> Result<ClusterSet> {
    cluster_terms_counting_orphans(idx, centroids).map(|(cs, _)| cs)
}

/// As [`cluster_terms`], also returning how many tokens had zero relatedness
/// to every centroid.
pub fn cluster_terms_counting_orphans(
    idx: &EncryptedIndex,
    centroids: &[TermToken],
) -> Result<(ClusterSet, usize)> {
    if centroids.is_empty() {
        return Err(Error::InvalidArgument("no centroids".into()));
    }
    let mut seen = HashSet::new();
    let mut centroid_docs = Vec::with_capacity(centroids.len());
    for c in centroids {
        if !seen.insert(*c) {
            return Err(Error::InvalidArgument(format!("duplicate centroid {c}")));
        }
        centroid_docs.push(idx.posting(c)?);
    }
    let mut clusters: Vec<Cluster> = centroids
        .iter()
        .enumerate()
        .map(|(i, c)| Cluster {
            cluster_id: i as ClusterId,
            centroid: *c,
            members: BTreeSet::from([*c]),
        })
        .collect();
    let mut orphans = 0;
    for (token, docs) in &idx.postings {
        if seen.contains(token) {
            continue;
        }
        let mut best = (0usize, 0usize);
        for (i, cdocs) in centroid_docs.iter().enumerate() {
            let r = intersection_len(docs, cdocs);
            if r > best.1 {
                best = (i, r);
            }
        }
        if best.1 == 0 {
            orphans += 1;
        }
        clusters[best.0].members.insert(*token);
    }
    if orphans > 0 {
        tracing::info!(
            orphans,
            tokens = idx.token_count(),
            "tokens unrelated to every centroid assigned to cluster 0"
        );
    }
    Ok((ClusterSet::new(clusters)?, orphans))
}

/// Optional k-means style refinement: each cluster's centroid becomes the
/// member with the largest summed relatedness to the other members, then
/// tokens are reassigned. Stops early once centroids are stable.
pub fn refine_clusters(
    idx: &EncryptedIndex,
    mut cs: ClusterSet,
    iterations: usize,
) -> Result<ClusterSet> {
    for _ in 0..iterations {
        let mut centroids = Vec::with_capacity(cs.k());
        for c in cs.clusters() {
            let members: Vec<(&TermToken, &BTreeSet<DocId>)> = c
                .members
                .iter()
                .map(|m| Ok((m, idx.posting(m)?)))
                .collect::<Result<_>>()?;
            let mut best = (c.centroid, 0usize);
            let mut best_set = false;
            for (m, docs) in &members {
                let total: usize = members
                    .iter()
                    .filter(|(o, _)| o != m)
                    .map(|(_, od)| intersection_len(docs, od))
                    .sum();
                if !best_set || total > best.1 {
                    best = (**m, total);
                    best_set = true;
                }
            }
            centroids.push(best.0);
        }
        let current: Vec<TermToken> = cs.clusters().iter().map(|c| c.centroid).collect();
        if centroids == current {
            break;
        }
        cs = cluster_terms(idx, &centroids)?;
    }
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(n: u8) -> TermToken {
        TermToken::from_bytes([n; 32])
    }

    fn index(postings: &[(u8, &[&str])]) -> EncryptedIndex {
        let mut idx = EncryptedIndex::new();
        for (t, docs) in postings {
            for d in *docs {
                idx.doc_store.insert(d.to_string(), vec![0]);
            }
            idx.postings
                .insert(tok(*t), docs.iter().map(|d| d.to_string()).collect());
        }
        idx
    }

    #[test]
    fn mostly_unique_token_is_eligible() {
        // token 1 covers d3 first; token 2 alone in d1,d2 and shares d3
        let idx = index(&[(1, &["d3", "d4", "d5", "d6"]), (2, &["d1", "d2", "d3"])]);
        assert_eq!(select_centroids(&idx, 2).unwrap(), vec![tok(1), tok(2)]);
    }

    #[test]
    fn fully_shared_token_is_not_eligible() {
        // token 2 only appears where token 1 already is: unique 0, shared 2
        let idx = index(&[(1, &["d1", "d2", "d3"]), (2, &["d1", "d2"]), (3, &["d9"])]);
        assert_eq!(select_centroids(&idx, 2).unwrap(), vec![tok(1), tok(3)]);
    }

    #[test]
    fn five_token_fixture_enumerated_by_hand() {
        // Scan order (size desc, hex asc): t1(4) t2(3) t3(3) t4(2) t5(1)
        //   t1: covered {} -> unique 4 > shared 0 -> chosen, covered d1..d4
        //   t2: {d3,d4,d5}: shared 2, unique 1 -> no
        //   t3: {d6,d7,d8}: unique 3 -> chosen (k = 2 reached)
        let idx = index(&[
            (1, &["d1", "d2", "d3", "d4"]),
            (2, &["d3", "d4", "d5"]),
            (3, &["d6", "d7", "d8"]),
            (4, &["d1", "d6"]),
            (5, &["d9"]),
        ]);
        let first = select_centroids(&idx, 2).unwrap();
        assert_eq!(first, vec![tok(1), tok(3)]);
        for _ in 0..5 {
            assert_eq!(select_centroids(&idx, 2).unwrap(), first);
        }
        // k = 4: t4 {d1,d6} shared 2 -> no; t5 {d9} unique -> chosen; the
        // fill takes the best remaining margin: t2 (3 - 2*2 = -1) vs
        // t4 (2 - 2*2 = -2) -> t2.
        assert_eq!(
            select_centroids(&idx, 4).unwrap(),
            vec![tok(1), tok(3), tok(5), tok(2)]
        );
    }

    #[test]
    fn k_bounds() {
        let idx = index(&[(1, &["d1"])]);
        assert!(select_centroids(&idx, 0).is_err());
        assert!(select_centroids(&idx, 2).is_err());
    }

    #[test]
    fn argmax_assignment() {
        let idx = index(&[
            (10, &["d1", "d2", "d3", "d4"]),
            (20, &["d5", "d6"]),
            (30, &["d1", "d2", "d3", "d5"]),
        ]);
        let cs = cluster_terms(&idx, &[tok(10), tok(20)]).unwrap();
        assert_eq!(cs.cluster_of(&tok(30)), Some(0));
    }

    #[test]
    fn tie_goes_to_lowest_id() {
        let idx = index(&[
            (10, &["d1", "d2"]),
            (20, &["d3", "d4"]),
            (30, &["d1", "d2", "d3", "d4"]),
        ]);
        let cs = cluster_terms(&idx, &[tok(20), tok(10)]).unwrap();
        assert_eq!(cs.cluster_of(&tok(30)), Some(0));
        assert_eq!(cs.get(0).unwrap().centroid, tok(20));
    }

    #[test]
    fn orphans_go_to_cluster_zero() {
        let idx = index(&[(10, &["d1"]), (20, &["d2"]), (30, &["d3"])]);
        let (cs, orphans) = cluster_terms_counting_orphans(&idx, &[tok(20), tok(10)]).unwrap();
        assert_eq!(orphans, 1);
        assert_eq!(cs.cluster_of(&tok(30)), Some(0));
    }

    #[test]
    fn bad_centroids() {
        let idx = index(&[(10, &["d1"])]);
        assert!(cluster_terms(&idx, &[]).is_err());
        assert!(cluster_terms(&idx, &[tok(10), tok(10)]).is_err());
        assert!(matches!(
            cluster_terms(&idx, &[tok(99)]),
            Err(Error::UnknownToken(_))
        ));
    }

    #[test]
    fn cluster_set_rejects_overlap() {
        let a = Cluster {
            cluster_id: 0,
            centroid: tok(1),
            members: BTreeSet::from([tok(1), tok(2)]),
        };
        let b = Cluster {
            cluster_id: 1,
            centroid: tok(2),
            members: BTreeSet::from([tok(2)]),
        };
        assert!(ClusterSet::new(vec![a.clone(), b]).is_err());
        let bad_id = Cluster {
            cluster_id: 5,
            ..a.clone()
        };
        assert!(ClusterSet::new(vec![bad_id]).is_err());
        let no_centroid = Cluster {
            cluster_id: 0,
            centroid: tok(9),
            members: BTreeSet::from([tok(1)]),
        };
        assert!(ClusterSet::new(vec![no_centroid]).is_err());
    }

    #[test]
    fn refinement_moves_centroid_to_medoid() {
        // cluster 0 starts at the peripheral token 11; 12 is the best-connected member
        let idx = index(&[
            (11, &["d1"]),
            (12, &["d1", "d2", "d3"]),
            (13, &["d2", "d3"]),
            (20, &["d9"]),
        ]);
        let cs = cluster_terms(&idx, &[tok(11), tok(20)]).unwrap();
        let refined = refine_clusters(&idx, cs, 3).unwrap();
        assert_eq!(refined.get(0).unwrap().centroid, tok(12));
        assert_eq!(refined.cluster_of(&tok(13)), Some(0));
    }
}
