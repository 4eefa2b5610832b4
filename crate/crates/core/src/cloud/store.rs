use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::{Cluster, ClusterSet};
use super::index::EncryptedIndex;
use crate::corpus::TermToken;
use crate::{DocId, Error, Result};

pub const INDEX_MAGIC: &str = "prunesearch-index";
pub const INDEX_VERSION: u32 = 1;

const META: &str = "meta.json";
const POSTINGS: &str = "postings.jsonl";
const CLUSTERS: &str = "clusters.jsonl";
const DOCS: &str = "docs";

/// Everything the cloud tier keeps on disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CloudState {
    pub index: EncryptedIndex,
    pub clusters: Option<ClusterSet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    magic: String,
    version: u32,
    k: usize,
    token_count: usize,
    doc_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostingLine {
    token: TermToken,
    doc_ids: BTreeSet<DocId>,
}

impl CloudState {
    pub fn persist(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let docs_dir = dir.join(DOCS);
        if docs_dir.exists() {
            fs::remove_dir_all(&docs_dir)?;
        }
        fs::create_dir_all(&docs_dir)?;
        for (id, ct) in &self.index.doc_store {
            fs::write(
                docs_dir.join(format!("{}.bin", hex::encode(id.as_bytes()))),
                ct,
            )?;
        }

        let mut out = BufWriter::new(fs::File::create(dir.join(POSTINGS))?);
        for (token, doc_ids) in &self.index.postings {
            serde_json::to_writer(
                &mut out,
                &PostingLine {
                    token: *token,
                    doc_ids: doc_ids.clone(),
                },
            )?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        let mut out = BufWriter::new(fs::File::create(dir.join(CLUSTERS))?);
        for c in self.clusters.iter().flat_map(|cs| cs.clusters()) {
            serde_json::to_writer(&mut out, c)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        // Written last so a crash mid-persist leaves a detectably stale directory.
        let meta = Meta {
            magic: INDEX_MAGIC.into(),
            version: INDEX_VERSION,
            k: self.clusters.as_ref().map_or(0, ClusterSet::k),
            token_count: self.index.token_count(),
            doc_count: self.index.doc_count(),
        };
        fs::write(dir.join(META), serde_json::to_vec_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META);
        let corrupt = |path: &Path, msg: String| Error::Corrupt {
            path: path.to_path_buf(),
            msg,
        };
        let meta: Meta =
            serde_json::from_slice(&fs::read(&meta_path)?).map_err(|e| Error::Version {
                path: meta_path.clone(),
                msg: format!("unreadable header: {e}"),
            })?;
        if meta.magic != INDEX_MAGIC {
            return Err(Error::Version {
                path: meta_path,
                msg: format!("bad magic {:?}", meta.magic),
            });
        }
        if meta.version != INDEX_VERSION {
            return Err(Error::Version {
                path: meta_path,
                msg: format!(
                    "version {} not supported (expected {INDEX_VERSION})",
                    meta.version
                ),
            });
        }

        let mut index = EncryptedIndex::new();
        let postings_path = dir.join(POSTINGS);
        for (i, line) in fs::read_to_string(&postings_path)?.lines().enumerate() {
            let p: PostingLine = serde_json::from_str(line)
                .map_err(|e| corrupt(&postings_path, format!("line {}: {e}", i + 1)))?;
            if index.postings.insert(p.token, p.doc_ids).is_some() {
                return Err(corrupt(
                    &postings_path,
                    format!("line {}: duplicate token", i + 1),
                ));
            }
        }

        let docs_dir = dir.join(DOCS);
        for entry in fs::read_dir(&docs_dir)? {
            let path = entry?.path();
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let id = hex::decode(name)
                .ok()
                .and_then(|b| String::from_utf8(b).ok())
                .ok_or_else(|| corrupt(&path, "file name is not a hex doc id".into()))?;
            index.doc_store.insert(id, fs::read(&path)?);
        }

        let clusters_path = dir.join(CLUSTERS);
        let mut clusters = Vec::new();
        for (i, line) in fs::read_to_string(&clusters_path)?.lines().enumerate() {
            let c: Cluster = serde_json::from_str(line)
                .map_err(|e| corrupt(&clusters_path, format!("line {}: {e}", i + 1)))?;
            clusters.push(c);
        }

        if index.token_count() != meta.token_count
            || index.doc_count() != meta.doc_count
            || clusters.len() != meta.k
        {
            return Err(corrupt(
                dir,
                format!(
                    "counts differ from meta.json: {} tokens, {} docs, {} clusters on disk",
                    index.token_count(),
                    index.doc_count(),
                    clusters.len()
                ),
            ));
        }
        index
            .validate()
            .map_err(|e| corrupt(&postings_path, e.to_string()))?;
        let clusters = if clusters.is_empty() {
            None
        } else {
            let cs =
                ClusterSet::new(clusters).map_err(|e| corrupt(&clusters_path, e.to_string()))?;
            if cs.token_count() != index.token_count() {
                return Err(corrupt(
                    &clusters_path,
                    "clusters do not cover the token set".into(),
                ));
            }
            Some(cs)
        };
        Ok(Self { index, clusters })
    }

    /// Loads `dir` if it holds an index, otherwise starts empty.
    pub fn open_or_default(dir: &Path) -> Result<Self> {
        if dir.join(META).exists() {
            Self::load(dir)
        } else {
            Ok(Self::default())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::cluster::cluster_terms;

    fn tok(n: u8) -> TermToken {
        TermToken::from_bytes([n; 32])
    }

    fn state() -> CloudState {
        let mut index = EncryptedIndex::new();
        index.doc_store.insert("d1".into(), vec![1, 2, 3]);
        index.doc_store.insert("doc/with space".into(), vec![]);
        index.postings.insert(tok(1), BTreeSet::from(["d1".into()]));
        index.postings.insert(
            tok(2),
            BTreeSet::from(["d1".into(), "doc/with space".into()]),
        );
        let clusters = Some(cluster_terms(&index, &[tok(2)]).unwrap());
        CloudState { index, clusters }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = state();
        s.persist(dir.path()).unwrap();
        assert_eq!(CloudState::load(dir.path()).unwrap(), s);
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        CloudState::default().persist(dir.path()).unwrap();
        assert_eq!(CloudState::load(dir.path()).unwrap(), CloudState::default());
    }

    #[test]
    fn persist_twice_drops_stale_docs() {
        let dir = tempfile::tempdir().unwrap();
        state().persist(dir.path()).unwrap();
        CloudState::default().persist(dir.path()).unwrap();
        assert_eq!(CloudState::load(dir.path()).unwrap(), CloudState::default());
    }

    #[test]
    fn bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        state().persist(dir.path()).unwrap();
        let meta = fs::read_to_string(dir.path().join(META))
            .unwrap()
            .replace(INDEX_MAGIC, "something-else");
        fs::write(dir.path().join(META), meta).unwrap();
        assert!(matches!(
            CloudState::load(dir.path()),
            Err(Error::Version { .. })
        ));
    }

    #[test]
    fn future_version() {
        let dir = tempfile::tempdir().unwrap();
        state().persist(dir.path()).unwrap();
        let meta = fs::read_to_string(dir.path().join(META))
            .unwrap()
            .replace("\"version\": 1", "\"version\": 7");
        fs::write(dir.path().join(META), meta).unwrap();
        assert!(matches!(
            CloudState::load(dir.path()),
            Err(Error::Version { .. })
        ));
    }

    #[test]
    fn truncated_postings() {
        let dir = tempfile::tempdir().unwrap();
        state().persist(dir.path()).unwrap();
        let path = dir.path().join(POSTINGS);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() - 20]).unwrap();
        assert!(matches!(
            CloudState::load(dir.path()),
            Err(Error::Corrupt { .. })
        ));
        let first_line = text.lines().next().unwrap();
        fs::write(&path, format!("{first_line}\n")).unwrap();
        assert!(matches!(
            CloudState::load(dir.path()),
            Err(Error::Corrupt { .. })
        ));
    }

    #[test]
    fn open_missing_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            CloudState::open_or_default(&dir.path().join("nope")).unwrap(),
            CloudState::default()
        );
    }
}
