use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::{ClusterId, Error, Result};

/// Records without a session id are split into sessions after this much
/// inactivity.
pub const SESSION_GAP_MS: u64 = 30 * 60 * 1000;

/// One executed search as seen by the edge. Only the user's own terms are
/// kept; expansions never enter the history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub session_id: String,
    pub timestamp_ms: u64,
    pub raw_query: String,
    pub terms: Vec<String>,
    pub hit_clusters: Vec<ClusterId>,
    /// Cluster holding each term's token, parallel to `terms`. Empty when
    /// unknown, in which case every term counts for every hit cluster.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub term_clusters: Vec<Option<ClusterId>>,
    pub result_count: usize,
}

impl SearchRecord {
    pub fn hits(&self, cluster: ClusterId) -> bool {
        self.hit_clusters.contains(&cluster)
    }

    /// The record's terms that reached `cluster`, in query order.
    pub fn terms_for(&self, cluster: ClusterId) -> impl Iterator<Item = &str> {
        let hit = self.hits(cluster);
        self.terms.iter().enumerate().filter_map(move |(i, t)| {
            let keep = match self.term_clusters.get(i) {
                Some(c) => *c == Some(cluster),
                None => hit && self.term_clusters.is_empty(),
            };
            keep.then_some(t.as_str())
        })
    }
}

/// Groups records into sessions: by explicit id (first appearance order),
/// and for records with an empty id by [`SESSION_GAP_MS`] of inactivity.
pub fn sessions<'a>(records: &[&'a SearchRecord]) -> Vec<Vec<&'a SearchRecord>> {
    let mut named: IndexMap<&str, Vec<&SearchRecord>> = IndexMap::new();
    let mut anonymous: Vec<Vec<&SearchRecord>> = Vec::new();
    let mut last_ts: Option<u64> = None;
    for r in records {
        if r.session_id.is_empty() {
            let gap = last_ts.is_none_or(|t| r.timestamp_ms.saturating_sub(t) > SESSION_GAP_MS);
            if gap || anonymous.is_empty() {
                anonymous.push(Vec::new());
            }
            anonymous.last_mut().expect("pushed above").push(r);
            last_ts = Some(r.timestamp_ms);
        } else {
            named.entry(r.session_id.as_str()).or_default().push(r);
        }
    }
    named.into_values().chain(anonymous).collect()
}

/// Append-only search history, optionally mirrored to a JSON-lines file.
#[derive(Debug, Default)]
pub struct HistoryLog {
    inner: Mutex<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<SearchRecord>,
    file: Option<(PathBuf, File)>,
}

impl HistoryLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads any records already in `path` and appends new ones to it.
    pub fn open(path: &Path) -> Result<Self> {
        let records = if path.exists() {
            read_history(path)?
        } else {
            Vec::new()
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Mutex::new(Inner {
                records,
                file: Some((path.to_path_buf(), file)),
            }),
        })
    }

    pub fn append(&self, record: SearchRecord) -> Result<()> {
        let mut inner = self.inner.lock();
        if let Some((_, file)) = inner.file.as_mut() {
            let mut line = serde_json::to_vec(&record)?;
            line.push(b'\n');
            file.write_all(&line)?;
        }
        inner.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<SearchRecord> {
        self.inner.lock().records.clone()
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.inner.lock().file.as_ref().map(|(p, _)| p.clone())
    }
}

pub fn read_history(path: &Path) -> Result<Vec<SearchRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::parse("history", i + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) fn record(
    session: &str,
    ts: u64,
    terms: &[&str],
    clusters: &[ClusterId],
) -> SearchRecord {
    SearchRecord {
        session_id: session.into(),
        timestamp_ms: ts,
        raw_query: terms.join(" "),
        terms: terms.iter().map(|t| t.to_string()).collect(),
        hit_clusters: clusters.to_vec(),
        term_clusters: Vec::new(),
        result_count: 0,
    }
}
