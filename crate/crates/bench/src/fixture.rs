//! Synthetic topic corpus with a matching taxonomy.
//!
//! Each topic has an in-taxonomy vocabulary split into subtopics and a pool
//! of jargon words the taxonomy does not know (names, codes, product
//! words). Documents mix a few frequent vocabulary words, a Zipf-weighted
//! draw of jargon and single-use filler, so extracted keywords carry topic
//! structure while the distinct-term count stays large.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use prunesearch_core::corpus::text::{is_stop_word, stem};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed of the committed fixture.
pub const FIXTURE_SEED: u64 = 20_190_701;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub subtopics: usize,
    pub words_per_subtopic: usize,
    pub jargon_per_topic: usize,
    /// Vocabulary words per document, drawn mostly from one subtopic.
    pub vocab_per_doc: usize,
    pub jargon_per_doc: usize,
    pub filler_per_doc: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            topics: 10,
            docs_per_topic: 20,
            subtopics: 3,
            words_per_subtopic: 6,
            jargon_per_topic: 70,
            vocab_per_doc: 5,
            jargon_per_doc: 10,
            filler_per_doc: 180,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    /// `(doc_id, text)` in id order.
    pub docs: Vec<(String, String)>,
    /// `child<TAB>parent` lines.
    pub taxonomy: String,
    /// Every topic word and jargon word; all are at least six characters.
    pub keywords: BTreeSet<String>,
}

struct WordMint {
    rng: ChaCha8Rng,
    used: BTreeSet<String>,
}

const ONSETS: &[&str] = &[
    "b", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gr", "tr", "st",
];
const VOWELS: &[&str] = &["a", "o", "u", "i"];
const CODAS: &[&str] = &["n", "r", "l", "m", "k", "x", "t"];

impl WordMint {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            used: BTreeSet::new(),
        }
    }

    /// A fresh pronounceable word that survives stemming unchanged and
    /// contains a letter outside `a-f`, so it can never appear inside hex.
    /// Falls back to longer words once short ones keep colliding.
    fn word(&mut self, mut syllables: usize) -> String {
        for attempt in 1.. {
            if attempt % 64 == 0 {
                syllables += 1;
            }
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut self.rng).expect("non-empty"));
                w.push_str(VOWELS.choose(&mut self.rng).expect("non-empty"));
            }
            w.push_str(CODAS.choose(&mut self.rng).expect("non-empty"));
            let ok = w.len() >= 6
                && stem(&w) == w
                && !is_stop_word(&w)
                && w.chars().any(|c| !('a'..='f').contains(&c))
                && !self.used.contains(&w);
            if ok {
                self.used.insert(w.clone());
                return w;
            }
        }
        unreachable!()
    }
}

struct Topic {
    subtopics: Vec<Vec<String>>,
    jargon: Vec<String>,
}

pub fn generate_fixture(seed: u64, spec: &FixtureSpec) -> Fixture {
    let mut mint = WordMint::new(seed);
    let mut taxonomy =
        String::from("# synthetic topic taxonomy: child<TAB>parent, roots marked '-'\n");
    let root = mint.word(3);
    taxonomy.push_str(&format!("{root}\t-\n"));
    let mut keywords = BTreeSet::new();

    let mut topics = Vec::with_capacity(spec.topics);
    for _ in 0..spec.topics {
        let topic_node = mint.word(3);
        taxonomy.push_str(&format!("{topic_node}\t{root}\n"));
        let mut subtopics = Vec::with_capacity(spec.subtopics);
        for _ in 0..spec.subtopics {
            let sub_node = mint.word(3);
            taxonomy.push_str(&format!("{sub_node}\t{topic_node}\n"));
            let words: Vec<String> = (0..spec.words_per_subtopic).map(|_| mint.word(3)).collect();
            for w in &words {
                taxonomy.push_str(&format!("{w}\t{sub_node}\n"));
                keywords.insert(w.clone());
            }
            subtopics.push(words);
        }
        let jargon: Vec<String> = (0..spec.jargon_per_topic).map(|_| mint.word(3)).collect();
        keywords.extend(jargon.iter().cloned());
        topics.push(Topic { subtopics, jargon });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let glue = ["the", "of", "and", "with", "for", "in", "on", "by"];
    let mut docs = Vec::with_capacity(spec.topics * spec.docs_per_topic);
    for (t, topic) in topics.iter().enumerate() {
        let zipf: Vec<f64> = (1..=topic.jargon.len()).map(|r| 1.0 / r as f64).collect();
        for d in 0..spec.docs_per_topic {
            let mut bag: Vec<String> = Vec::new();
            let main = rng.random_range(0..topic.subtopics.len());
            let mut vocab: Vec<&String> = topic.subtopics[main].iter().collect();
            vocab.shuffle(&mut rng);
            let from_main = spec.vocab_per_doc.saturating_sub(2).min(vocab.len());
            let mut chosen: Vec<&String> = vocab[..from_main].to_vec();
            let others: Vec<&String> = topic
                .subtopics
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != main)
                .flat_map(|(_, ws)| ws)
                .collect();
            while chosen.len() < spec.vocab_per_doc {
                let w = *others
                    .choose(&mut rng)
                    .expect("topics have several subtopics");
                if !chosen.contains(&w) {
                    chosen.push(w);
                }
            }
            for w in chosen {
                for _ in 0..rng.random_range(5..=7) {
                    bag.push(w.clone());
                }
            }
            for i in weighted_distinct(&mut rng, &zipf, spec.jargon_per_doc) {
                for _ in 0..rng.random_range(2..=4) {
                    bag.push(topic.jargon[i].clone());
                }
            }
            for _ in 0..spec.filler_per_doc {
                bag.push(mint.word(2 + rng.random_range(0..2usize)));
            }
            bag.shuffle(&mut rng);
            let mut text = String::new();
            for (i, w) in bag.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                }
                if i % 7 == 3 {
                    text.push_str(glue.choose(&mut rng).expect("non-empty"));
                    text.push(' ');
                }
                text.push_str(w);
                if i % 13 == 12 {
                    text.push('.');
                }
            }
            text.push_str(".\n");
            docs.push((format!("d{:03}", t * spec.docs_per_topic + d), text));
        }
    }
    Fixture {
        docs,
        taxonomy,
        keywords,
    }
}

/// `n` distinct indices drawn without replacement in proportion to `weights`.
fn weighted_distinct(rng: &mut impl Rng, weights: &[f64], n: usize) -> Vec<usize> {
    let mut remaining: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|(_, w)| w).sum();
        let mut x = rng.random_range(0.0..total);
        let mut pick = remaining.len() - 1;
        for (j, (_, w)) in remaining.iter().enumerate() {
            if x < *w {
                pick = j;
                break;
            }
            x -= w;
        }
        out.push(remaining.remove(pick).0);
    }
    out
}

impl Fixture {
    /// Writes `corpus/<doc_id>.txt`, `taxonomy.tsv` and `keywords.txt`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let corpus = dir.join("corpus");
        fs::create_dir_all(&corpus)?;
        for (id, text) in &self.docs {
            fs::write(corpus.join(format!("{id}.txt")), text)?;
        }
        fs::write(dir.join("taxonomy.tsv"), &self.taxonomy)?;
        let mut kw: String = self.keywords.iter().map(|k| format!("{k}\n")).collect();
        if kw.is_empty() {
            kw.push('\n');
        }
        fs::write(dir.join("keywords.txt"), kw)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = FixtureSpec {
            topics: 2,
            docs_per_topic: 3,
            filler_per_doc: 10,
            ..Default::default()
        };
        assert_eq!(generate_fixture(1, &spec), generate_fixture(1, &spec));
        assert_ne!(
            generate_fixture(1, &spec).docs,
            generate_fixture(2, &spec).docs
        );
    }

    #[test]
    fn keywords_are_long_and_stem_stable() {
        let spec = FixtureSpec {
            topics: 2,
            docs_per_topic: 2,
            filler_per_doc: 5,
            ..Default::default()
        };
        let f = generate_fixture(9, &spec);
        assert_eq!(f.keywords.len(), 2 * (3 * 6 + 70));
        for k in &f.keywords {
            assert!(k.len() >= 6, "{k}");
            assert_eq!(&stem(k), k);
        }
    }

    #[test]
    fn weighted_draw_is_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picks = weighted_distinct(&mut rng, &[1.0, 0.5, 0.25, 0.1], 4);
        let set: BTreeSet<usize> = picks.iter().copied().collect();
        assert_eq!(set.len(), 4);
    }
}
