//! Plaintext semantic similarity for the edge tier.

mod embedding;
mod taxonomy;

use std::path::Path;

pub use embedding::EmbeddingTable;
pub use taxonomy::Taxonomy;

use crate::Result;

/// Minimum similarity for a term to be used as a query expansion.
pub const EXPANSION_THRESHOLD: f64 = 0.5;

/// Source of term-to-term similarity in `[0, 1]`.
#[derive(Debug, Clone)]
pub enum SimilarityProvider {
    Taxonomy(Taxonomy),
    Embedding {
        table: EmbeddingTable,
        vocab: Vec<String>,
    },
}

impl SimilarityProvider {
    pub fn taxonomy(t: Taxonomy) -> Self {
        SimilarityProvider::Taxonomy(t)
    }

    pub fn embedding(table: EmbeddingTable) -> Self {
        let mut vocab: Vec<String> = table.terms().map(str::to_string).collect();
        vocab.sort();
        SimilarityProvider::Embedding { table, vocab }
    }

    pub fn load_taxonomy(path: &Path) -> Result<Self> {
        Taxonomy::load(path).map(Self::taxonomy)
    }

    pub fn load_embeddings(path: &Path) -> Result<Self> {
        EmbeddingTable::load(path).map(Self::embedding)
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        match self {
            SimilarityProvider::Taxonomy(t) => t.wu_palmer(a, b),
            SimilarityProvider::Embedding { table, .. } => table.cosine_sim(a, b),
        }
    }

    /// Candidate expansion terms, sorted. For a taxonomy these are the leaves;
    /// inner nodes are category labels.
    pub fn expansion_vocabulary(&self) -> &[String] {
        match self {
            SimilarityProvider::Taxonomy(t) => t.leaves(),
            SimilarityProvider::Embedding { vocab, .. } => vocab,
        }
    }
}

/// Similarity used when comparing user terms against abstract terms: an
/// exact string match is 1.0 even when the term is unknown to the provider.
pub fn term_similarity(p: &SimilarityProvider, a: &str, b: &str) -> f64 {
    if a == b {
        1.0
    } else {
        p.similarity(a, b)
    }
}

/// Original terms (deduplicated, in order) followed by up to `n` expansions
/// per term: the most similar vocabulary terms scoring at least
/// [`EXPANSION_THRESHOLD`].
pub fn expand_query(terms: &[String], n: usize, p: &SimilarityProvider) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(terms.len() * (n + 1));
    for t in terms {
        if !out.contains(t) {
            out.push(t.clone());
        }
    }
    if n == 0 {
        return out;
    }
    let vocab = p.expansion_vocabulary();
    for t in terms {
        let mut scored: Vec<(f64, &String)> = vocab
            .iter()
            .filter(|v| *v != t)
            .map(|v| (p.similarity(t, v), v))
            .filter(|(s, _)| *s >= EXPANSION_THRESHOLD)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        for (_, v) in scored.into_iter().take(n) {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// root → animal → {dog, cat}
    pub fn animals() -> SimilarityProvider {
        SimilarityProvider::taxonomy(
            Taxonomy::parse("root\t-\nanimal\troot\ndog\tanimal\ncat\tanimal\n").unwrap(),
        )
    }

    /// root → animal → {dog, cat, puppy}; root → machine → engine
    pub fn zoo() -> SimilarityProvider {
        SimilarityProvider::taxonomy(
            Taxonomy::parse(
                "root\t-\nanimal\troot\ndog\tanimal\ncat\tanimal\npuppy\tanimal\nmachine\troot\nengine\tmachine\n",
            )
            .unwrap(),
        )
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::fixtures::*;
    use super::*;

    fn terms(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn expand_none() {
        assert_eq!(
            expand_query(&terms(&["dog"]), 0, &animals()),
            terms(&["dog"])
        );
    }

    #[test]
    fn expand_sibling() {
        assert_eq!(
            expand_query(&terms(&["dog"]), 1, &animals()),
            terms(&["dog", "cat"])
        );
    }

    #[test]
    fn expand_empty() {
        assert!(expand_query(&[], 3, &animals()).is_empty());
    }

    #[test]
    fn expand_dedups_and_keeps_order() {
        let got = expand_query(&terms(&["cat", "dog", "cat"]), 2, &animals());
        assert_eq!(got, terms(&["cat", "dog"]));
    }

    #[test]
    fn expansion_respects_threshold() {
        // engine vs dog: LCS root depth 1, 2/(3+3) = 0.333 < 0.5
        let got = expand_query(&terms(&["engine"]), 5, &zoo());
        assert_eq!(got, terms(&["engine"]));
    }

    #[test]
    fn embedding_provider_expands() {
        let table = EmbeddingTable::parse("2\nsea 1 0\nocean 0.9 0.1\nfire 0 1\n").unwrap();
        let p = SimilarityProvider::embedding(table);
        assert_eq!(
            expand_query(&terms(&["sea"]), 2, &p),
            terms(&["sea", "ocean"])
        );
    }

    #[test]
    fn exact_match_beats_oov() {
        assert_eq!(term_similarity(&animals(), "frozen", "frozen"), 1.0);
        assert_eq!(animals().similarity("frozen", "frozen"), 0.0);
    }

    fn random_taxonomy() -> impl Strategy<Value = Taxonomy> {
        // parent index < child index keeps it acyclic; None makes a root
        prop::collection::vec(
            prop::option::weighted(0.85, any::<prop::sample::Index>()),
            1..30,
        )
        .prop_map(|parents| {
            let edges = parents.iter().enumerate().map(|(i, p)| {
                let par = if i == 0 {
                    None
                } else {
                    p.map(|ix| format!("n{}", ix.index(i)))
                };
                (format!("n{i}"), par)
            });
            Taxonomy::from_edges(edges).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn wu_palmer_symmetric_and_bounded(t in random_taxonomy(), a in 0usize..32, b in 0usize..32) {
            let (a, b) = (format!("n{a}"), format!("n{b}"));
            let s = t.wu_palmer(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, t.wu_palmer(&b, &a));
            if t.contains(&a) {
                prop_assert_eq!(t.wu_palmer(&a, &a), 1.0);
            }
        }

        #[test]
        fn depth_is_parent_plus_one(t in random_taxonomy()) {
            for i in 0..30 {
                let n = format!("n{i}");
                if let Some(d) = t.depth(&n) {
                    match t.parent(&n) {
                        Some(p) => prop_assert_eq!(d, t.depth(p).unwrap() + 1),
                        None => prop_assert_eq!(d, 1),
                    }
                }
            }
        }

        #[test]
        fn siblings_dominate_distant_terms(t in random_taxonomy(), a in 0usize..30) {
            // A sibling of `a` scores at least as high as any term whose LCS
            // with `a` is a strict ancestor of a's parent.
            let a = format!("n{a}");
            let Some(parent) = t.parent(&a) else { return Ok(()) };
            let nodes: Vec<String> = (0..30).map(|i| format!("n{i}")).filter(|n| t.contains(n)).collect();
            let siblings: Vec<&String> = nodes.iter().filter(|n| **n != a && t.parent(n) == Some(parent)).collect();
            for s in &siblings {
                for other in &nodes {
                    let Some(lcs) = t.lowest_common_ancestor(&a, other) else { continue };
                    let strict_above_parent = lcs != parent && t.ancestors(parent).any(|x| x == lcs);
                    if strict_above_parent {
                        prop_assert!(t.wu_palmer(&a, s) >= t.wu_palmer(&a, other));
                    }
                }
            }
        }

        #[test]
        fn cosine_symmetric_and_bounded(
            v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.1f64..5.0), 2..8),
            i in any::<prop::sample::Index>(),
            j in any::<prop::sample::Index>(),
        ) {
            let text: String = std::iter::once("3".to_string())
                .chain(v.iter().enumerate().map(|(k, (x, y, z))| format!("t{k} {x} {y} {z}")))
                .collect::<Vec<_>>()
                .join("\n");
            let e = EmbeddingTable::parse(&text).unwrap();
            let (a, b) = (format!("t{}", i.index(v.len())), format!("t{}", j.index(v.len())));
            let s = e.cosine_sim(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, e.cosine_sim(&b, &a));
            prop_assert_eq!(e.cosine_sim(&a, &a), 1.0);
        }
    }
}
