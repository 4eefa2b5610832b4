use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// A forest of terms. Root depth is 1; every non-root has exactly one parent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    parent: HashMap<String, Option<String>>,
    depth: HashMap<String, u32>,
    leaves: Vec<String>,
}

impl Taxonomy {
    /// Builds from `(child, parent)` edges; `None` marks a declared root. A
    /// parent that never appears as a child becomes an implicit root.
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Option<S>)>,
        S: Into<String>,
    {
        let mut parent: HashMap<String, Option<String>> = HashMap::new();
        for (i, (child, par)) in edges.into_iter().enumerate() {
            let child = child.into();
            let par = par.map(Into::into);
            if child.is_empty() || par.as_deref() == Some("") {
                return Err(Error::parse("taxonomy", i + 1, "empty term"));
            }
            if par.as_deref() == Some(child.as_str()) {
                return Err(Error::parse(
                    "taxonomy",
                    i + 1,
                    format!("{child} is its own parent"),
                ));
            }
            match parent.get(&child) {
                Some(existing) if *existing != par => {
                    return Err(Error::parse(
                        "taxonomy",
                        i + 1,
                        format!("{child} has more than one parent"),
                    ));
                }
                _ => {
                    parent.insert(child, par);
                }
            }
        }
        let implicit: Vec<String> = parent
            .values()
            .flatten()
            .filter(|p| !parent.contains_key(*p))
            .cloned()
            .collect();
        for root in implicit {
            parent.insert(root, None);
        }

        let mut depth: HashMap<String, u32> = HashMap::with_capacity(parent.len());
        for start in parent.keys() {
            if depth.contains_key(start) {
                continue;
            }
            // Walk up until a node of known depth (or a root), then unwind.
            let mut chain = vec![start.as_str()];
            let mut on_chain: HashSet<&str> = HashSet::from([start.as_str()]);
            let base;
            loop {
                let node = *chain.last().unwrap();
                match &parent[node] {
                    None => {
                        base = 0;
                        break;
                    }
                    Some(p) => {
                        if let Some(d) = depth.get(p) {
                            base = *d;
                            break;
                        }
                        if !on_chain.insert(p.as_str()) {
                            return Err(Error::InvalidArgument(format!(
                                "taxonomy cycle through {p}"
                            )));
                        }
                        chain.push(p.as_str());
                    }
                }
            }
            for (offset, node) in chain.iter().rev().enumerate() {
                depth.insert((*node).to_string(), base + offset as u32 + 1);
            }
        }

        let has_child: HashSet<&str> = parent.values().flatten().map(String::as_str).collect();
        let mut leaves: Vec<String> = parent
            .keys()
            .filter(|t| !has_child.contains(t.as_str()))
            .cloned()
            .collect();
        leaves.sort();
        Ok(Self {
            parent,
            depth,
            leaves,
        })
    }

    /// Parses `child<TAB>parent` lines; roots are written `term<TAB>-`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(child), Some(par), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse("taxonomy", i + 1, "expected child<TAB>parent"));
            };
            let par = if par == "-" {
                None
            } else {
                Some(par.to_string())
            };
            edges.push((child.to_string(), par));
        }
        Self::from_edges(edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.parent.contains_key(term)
    }

    pub fn depth(&self, term: &str) -> Option<u32> {
        self.depth.get(term).copied()
    }

    pub fn parent(&self, term: &str) -> Option<&str> {
        self.parent.get(term)?.as_deref()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Terms with no children, sorted.
    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    /// The term itself followed by its ancestors up to the root.
    pub fn ancestors<'a>(&'a self, term: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let start = self.contains(term).then_some(term);
        std::iter::successors(start, move |t| self.parent(t))
    }

    /// Deepest common ancestor, if the two terms share a root.
    pub fn lowest_common_ancestor<'a>(&'a self, a: &'a str, b: &'a str) -> Option<&'a str> {
        let (mut da, mut db) = (self.depth(a)?, self.depth(b)?);
        let (mut a, mut b) = (a, b);
        while da > db {
            a = self.parent(a)?;
            da -= 1;
        }
        while db > da {
            b = self.parent(b)?;
            db -= 1;
        }
        while a != b {
            a = self.parent(a)?;
            b = self.parent(b)?;
        }
        Some(a)
    }

    /// Wu-Palmer similarity `2·depth(lcs) / (depth(a) + depth(b))`; 0.0 when
    /// either term is unknown or the terms live under different roots.
    pub fn wu_palmer(&self, a: &str, b: &str) -> f64 {
        let (Some(da), Some(db)) = (self.depth(a), self.depth(b)) else {
            return 0.0;
        };
        match self
            .lowest_common_ancestor(a, b)
            .and_then(|l| self.depth(l))
        {
            Some(dl) => 2.0 * f64::from(dl) / f64::from(da + db),
            None => 0.0,
        }
    }
}
