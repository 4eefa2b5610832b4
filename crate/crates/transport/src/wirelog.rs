//! Record of every request body that reached the cloud.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireEntry {
    pub request_id: String,
    pub method: String,
    pub path: String,
    pub body: String,
}

#[derive(Debug, Default)]
pub struct WireLog {
    entries: Mutex<Vec<WireEntry>>,
    file: Option<(PathBuf, Mutex<File>)>,
}

impl WireLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Appends JSON lines to `path` as well as keeping them in memory.
    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            entries: Mutex::default(),
            file: Some((path.to_path_buf(), Mutex::new(file))),
        })
    }

    pub fn record(&self, entry: WireEntry) {
        if let Some((path, file)) = &self.file {
            let line = serde_json::to_string(&entry).expect("wire entries serialize");
            if let Err(e) = writeln!(file.lock(), "{line}") {
                tracing::error!(path = %path.display(), error = %e, "wire log write failed");
            }
        }
        self.entries.lock().push(entry);
    }

    pub fn entries(&self) -> Vec<WireEntry> {
        self.entries.lock().clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn read_wire_log(path: &Path) -> std::io::Result<Vec<WireEntry>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(out)
}

/// Which of `words` occur anywhere in the logged bodies or paths.
pub fn leaked_words<'a>(
    entries: &[WireEntry],
    words: impl IntoIterator<Item = &'a str>,
) -> Vec<&'a str> {
    words
        .into_iter()
        .filter(|w| {
            entries
                .iter()
                .any(|e| e.body.contains(w) || e.path.contains(w))
        })
        .collect()
}
