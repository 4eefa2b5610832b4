use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::{analyze, collapse_whitespace};
use crate::{DocId, Error, Result};

/// A plaintext document before encryption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub text: String,
    pub source_path: String,
}

impl Document {
    /// Builds a document, rejecting text that is empty after whitespace
    /// normalization.
    pub fn new(
        doc_id: impl Into<DocId>,
        text: impl Into<String>,
        source_path: impl Into<String>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let text = text.into();
        if doc_id.is_empty() {
            return Err(Error::InvalidArgument("empty doc_id".into()));
        }
        if collapse_whitespace(&text).is_empty() {
            return Err(Error::InvalidArgument(format!(
                "document {doc_id} has no text"
            )));
        }
        Ok(Self {
            doc_id,
            text,
            source_path: source_path.into(),
        })
    }
}

/// A term extracted from one or more documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRecord {
    pub term: String,
    pub frequency: u32,
    pub doc_ids: BTreeSet<DocId>,
}

/// Top-`k` terms of a document by term frequency, after stop-word removal and
/// stemming. Ordered by frequency descending, then term ascending.
pub fn extract_keywords(doc: &Document, k: usize) -> Vec<KeywordRecord> {
    let mut counts: HashMap<String, u32> = HashMap::new();
    for term in analyze(&doc.text) {
        *counts.entry(term).or_default() += 1;
    }
    let mut ranked: Vec<(String, u32)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(term, frequency)| KeywordRecord {
            term,
            frequency,
            doc_ids: BTreeSet::from([doc.doc_id.clone()]),
        })
        .collect()
}

/// Distinct analyzed terms across a set of documents (the denominator of the
/// abstract-overhead metric).
pub fn distinct_terms<'a>(docs: impl IntoIterator<Item = &'a Document>) -> BTreeSet<String> {
    docs.into_iter().flat_map(|d| analyze(&d.text)).collect()
}

/// Loads every `.txt` file of a directory; the file stem is the doc_id.
/// Files with no text are skipped. Output is sorted by doc_id.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") || !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let text = fs::read_to_string(&path)?;
        match Document::new(stem, text, path.display().to_string()) {
            Ok(doc) => docs.push(doc),
            Err(err) => tracing::warn!(path = %path.display(), %err, "skipping document"),
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document::new("d1", text, "mem").unwrap()
    }

    #[test]
    fn top_k_by_frequency_then_lexicographic() {
        let kws = extract_keywords(&doc("the cat sat on the cat mat"), 2);
        let got: Vec<_> = kws.iter().map(|k| (k.term.as_str(), k.frequency)).collect();
        assert_eq!(got, vec![("cat", 2), ("mat", 1)]);
    }

    #[test]
    fn at_most_k_keywords() {
        let text = (0..40).map(|i| format!("word{i} ")).collect::<String>();
        assert_eq!(extract_keywords(&doc(&text), 15).len(), 15);
    }

    #[test]
    fn stop_word_only_document_yields_nothing() {
        assert!(extract_keywords(&doc("the and of on to"), 5).is_empty());
    }

    #[test]
    fn keyword_record_invariants() {
        for kw in extract_keywords(&doc("alpha beta beta gamma gamma gamma"), 10) {
            assert!(!kw.term.contains(char::is_whitespace));
            assert!(!kw.doc_ids.is_empty());
            assert!(kw.frequency as usize >= kw.doc_ids.len());
        }
    }

    #[test]
    fn blank_document_rejected() {
        assert!(Document::new("d", "  \n\t ", "x").is_err());
        assert!(Document::new("", "text", "x").is_err());
    }

    #[test]
    fn corpus_dir_uses_file_stem() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "routers forward packets").unwrap();
        fs::write(dir.path().join("a.txt"), "protocol stack").unwrap();
        fs::write(dir.path().join("empty.txt"), "   ").unwrap();
        fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let docs = load_corpus_dir(dir.path()).unwrap();
        let ids: Vec<_> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
    }
}
