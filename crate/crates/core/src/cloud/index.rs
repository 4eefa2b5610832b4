use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{TermToken, UploadBatch};
use crate::{DocId, Error, Result};

/// Token-keyed postings plus the ciphertext store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncryptedIndex {
    pub postings: BTreeMap<TermToken, BTreeSet<DocId>>,
    pub doc_store: BTreeMap<DocId, Vec<u8>>,
}

impl EncryptedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merges a batch. Re-uploading a doc_id replaces its ciphertext.
    pub fn apply_upload(&mut self, batch: UploadBatch) {
        for doc in batch.encrypted_docs {
            self.doc_store.insert(doc.doc_id, doc.ciphertext);
        }
        for (token, ids) in batch.postings {
            self.postings.entry(token).or_default().extend(ids);
        }
    }

    pub fn token_count(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_store.len()
    }

    pub fn posting(&self, token: &TermToken) -> Result<&BTreeSet<DocId>> {
        self.postings
            .get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_hex()))
    }

    /// Checks that every posting references a stored document.
    pub fn validate(&self) -> Result<()> {
        for (token, ids) in &self.postings {
            if let Some(missing) = ids.iter().find(|d| !self.doc_store.contains_key(*d)) {
                return Err(Error::InvalidArgument(format!(
                    "posting {token} references missing document {missing}"
                )));
            }
        }
        Ok(())
    }
}

/// Number of documents two tokens co-occur in.
pub fn semantic_relatedness(t1: &TermToken, t2: &TermToken, idx: &EncryptedIndex) -> Result<usize> {
    let a = idx.posting(t1)?;
    let b = idx.posting(t2)?;
    Ok(intersection_len(a, b))
}

pub(crate) fn intersection_len(a: &BTreeSet<DocId>, b: &BTreeSet<DocId>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|d| large.contains(*d)).count()
}
