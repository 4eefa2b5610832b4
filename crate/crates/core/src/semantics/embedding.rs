use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Term vectors of a shared dimension. Zero vectors are rejected at load.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dim must be positive".into(),
            ));
        }
        for (term, v) in &vectors {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "vector for {term} has length {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().all(|x| *x == 0.0) {
                return Err(Error::InvalidArgument(format!("zero vector for {term}")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite component for {term}"
                )));
            }
        }
        Ok(Self { dim, vectors })
    }

    /// First line `dim`, then `term v1 .. vdim` per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("embeddings", 1, "missing dimension line"))?;
        let dim: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::parse("embeddings", 1, format!("bad dimension {header:?}")))?;
        let mut vectors = HashMap::new();
        for (i, line) in lines {
            let mut cols = line.split_whitespace();
            let term = cols.next().expect("non-empty line has a first column");
            let v: Vec<f64> = cols
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::parse("embeddings", i + 1, format!("bad float {c:?}")))
                })
                .collect::<Result<_>>()?;
            if v.len() != dim {
                return Err(Error::parse(
                    "embeddings",
                    i + 1,
                    format!("expected {dim} components, got {}", v.len()),
                ));
            }
            vectors.insert(term.to_string(), v);
        }
        Self::new(dim, vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.vectors.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// Cosine similarity floored at 0; 0.0 for unknown terms.
    pub fn cosine_sim(&self, a: &str, b: &str) -> f64 {
        let (Some(va), Some(vb)) = (self.get(a), self.get(b)) else {
            return 0.0;
        };
        if a == b {
            return 1.0;
        }
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}
