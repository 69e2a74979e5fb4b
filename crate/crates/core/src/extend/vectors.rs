use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Word vectors in the word2vec text format.
#[derive(Debug, Clone, Default)]
pub struct WordVectorStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorStore {
    /// One `word x1 … xd` record per line, optionally preceded by a
    /// `count dim` header line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut store = Self::default();
        let mut declared: Option<(usize, usize)> = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i as u64 + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 {
                if let (Ok(count), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    declared = Some((count, dim));
                    store.dim = dim;
                    continue;
                }
            }
            let values = fields[1..]
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::parse(origin, lineno, format!("bad vector component: {e}")))?;
            if values.is_empty() {
                return Err(Error::parse(origin, lineno, "word without a vector"));
            }
            if store.dim == 0 {
                store.dim = values.len();
            }
            if values.len() != store.dim {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected {} components, found {}", store.dim, values.len()),
                ));
            }
            store.vectors.insert(fields[0].to_owned(), values);
        }
        if let Some((count, _)) = declared {
            if count != store.vectors.len() {
                log::warn!(
                    "{}: header declares {count} vectors, file has {}",
                    origin.display(),
                    store.vectors.len()
                );
            }
        }
        Ok(store)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Vec<f64>)>) -> Result<Self> {
        let mut store = Self::default();
        for (w, v) in pairs {
            if store.dim == 0 {
                store.dim = v.len();
            }
            if v.len() != store.dim || v.is_empty() {
                return Err(Error::InvalidArgument(format!("vector for {w:?} has dimension {}", v.len())));
            }
            store.vectors.insert(w.to_owned(), v);
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exact lookup, then lower-case.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Mean vector of the in-vocabulary tokens, `None` when none are known.
    pub fn phrase_vector(&self, phrase: &str) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for tok in tokens(phrase) {
            if let Some(v) = self.get(tok) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                n += 1;
            }
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }
}

/// Whitespace tokens with surrounding punctuation removed.
pub fn tokens(phrase: &str) -> impl Iterator<Item = &str> {
    phrase
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
}

/// Cosine of two vectors; 0 when either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Cosine of the two phrases' mean word vectors. Out-of-vocabulary words are
/// skipped; a phrase with no known word has similarity 0 to everything.
pub fn phrase_similarity(store: &WordVectorStore, a: &str, b: &str) -> f64 {
    match (store.phrase_vector(a), store.phrase_vector(b)) {
        (Some(x), Some(y)) => cosine(&x, &y),
        _ => 0.0,
    }
}
