use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cipher::{encrypt_document, ChaChaCipher};
use super::document::{extract_keywords, Document};
use super::token::{tokenize_term, SecretKey, TermToken};
use crate::{DocId, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptedDoc {
    pub doc_id: DocId,
    #[serde(with = "hex_bytes")]
    pub ciphertext: Vec<u8>,
}

/// Everything the cloud receives at upload time: ciphertext and
/// token-keyed postings. No plaintext term is ever part of a batch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UploadBatch {
    pub encrypted_docs: Vec<EncryptedDoc>,
    pub postings: BTreeMap<TermToken, BTreeSet<DocId>>,
}

/// One JSON-lines record of a serialized batch.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum BatchRecord {
    Doc {
        doc_id: DocId,
        #[serde(with = "hex_bytes")]
        ciphertext: Vec<u8>,
    },
    Posting {
        token: TermToken,
        doc_ids: BTreeSet<DocId>,
    },
}

impl UploadBatch {
    pub fn is_empty(&self) -> bool {
        self.encrypted_docs.is_empty() && self.postings.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in &self.encrypted_docs {
            let rec = BatchRecord::Doc {
                doc_id: doc.doc_id.clone(),
                ciphertext: doc.ciphertext.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        for (token, doc_ids) in &self.postings {
            let rec = BatchRecord::Posting {
                token: *token,
                doc_ids: doc_ids.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses a JSON-lines batch and checks that every posting references a
    /// document carried in the same batch.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut batch = UploadBatch::default();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: BatchRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse("upload batch", i + 1, e.to_string()))?;
            match rec {
                BatchRecord::Doc { doc_id, ciphertext } => {
                    if !seen.insert(doc_id.clone()) {
                        return Err(Error::DuplicateDocId(doc_id));
                    }
                    batch
                        .encrypted_docs
                        .push(EncryptedDoc { doc_id, ciphertext });
                }
                BatchRecord::Posting { token, doc_ids } => {
                    batch.postings.entry(token).or_default().extend(doc_ids);
                }
            }
        }
        for (token, doc_ids) in &batch.postings {
            if let Some(missing) = doc_ids.iter().find(|d| !seen.contains(*d)) {
                return Err(Error::InvalidArgument(format!(
                    "posting {token} references unknown document {missing}"
                )));
            }
        }
        Ok(batch)
    }
}

/// Edge-side mapping from token back to the plaintext term. Never leaves the
/// trusted tier; used to seed the initial abstracts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary(pub BTreeMap<TermToken, String>);

#[derive(Serialize, Deserialize)]
struct VocabLine {
    token: TermToken,
    term: String,
}

impl Vocabulary {
    pub fn get(&self, token: &TermToken) -> Option<&str> {
        self.0.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn merge(&mut self, other: Vocabulary) {
        self.0.extend(other.0);
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (token, term) in &self.0 {
            serde_json::to_writer(
                &mut out,
                &VocabLine {
                    token: *token,
                    term: term.clone(),
                },
            )?;
            out.push(b'\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: VocabLine = serde_json::from_str(&line)
                .map_err(|e| Error::parse(path.display().to_string(), i + 1, e.to_string()))?;
            map.insert(rec.token, rec.term);
        }
        Ok(Self(map))
    }
}

/// Builds the batch together with the edge-side vocabulary.
pub fn prepare_upload(
    docs: &[Document],
    k_per_doc: usize,
    key: &SecretKey,
) -> Result<(UploadBatch, Vocabulary)> {
    let mut seen = HashSet::new();
    for doc in docs {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateDocId(doc.doc_id.clone()));
        }
    }
    let token_key = key.token_key();
    let cipher = ChaChaCipher::from_secret(key);
    let mut batch = UploadBatch::default();
    let mut vocab = Vocabulary::default();
    for doc in docs {
        let (doc_id, ciphertext) = encrypt_document(doc, &cipher);
        batch
            .encrypted_docs
            .push(EncryptedDoc { doc_id, ciphertext });
        for kw in extract_keywords(doc, k_per_doc) {
            let token = tokenize_term(&kw.term, &token_key)?;
            batch
                .postings
                .entry(token)
                .or_default()
                .insert(doc.doc_id.clone());
            vocab.0.insert(token, kw.term);
        }
    }
    Ok((batch, vocab))
}

pub fn build_upload(docs: &[Document], k_per_doc: usize, key: &SecretKey) -> Result<UploadBatch> {
    prepare_upload(docs, k_per_doc, key).map(|(batch, _)| batch)
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        hex::decode(s.as_ref()).map_err(serde::de::Error::custom)
    }
}
