//! Static word vectors with a deterministic character-hash fallback.
//!
//! Tables are read from the plain GloVe text format (`token v1 ... vd`, one
//! token per line, no header). Tokens missing from the table are encoded
//! from their spelling: every character n-gram of `^token$` is hashed into
//! one of `d` buckets with a ±1 sign, the hits are averaged and the result is
//! rescaled to the table's mean vector norm so OOV vectors live at the same
//! scale as stored ones.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::matrix::{euclidean_norm, Matrix};
use crate::seed::hash_bytes;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("cannot read embedding file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} coefficients, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: coefficient {value:?} is not a number")]
    NotNumeric { line: usize, value: String },
    #[error("line {line}: token has no coefficients")]
    MissingVector { line: usize },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
}

/// Immutable token → vector lookup.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    mean_norm: f64,
}

/// A table load result together with the duplicate-token warnings raised
/// while reading it.
#[derive(Debug)]
pub struct LoadedTable {
    pub table: EmbeddingTable,
    pub warnings: Vec<String>,
}

impl EmbeddingTable {
    /// A table with no stored vectors; every token goes through the
    /// fallback, which then produces unit-norm vectors.
    pub fn empty(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(Self {
            dim,
            index: HashMap::new(),
            vectors: Vec::new(),
            mean_norm: 1.0,
        })
    }

    /// Builds a table from `(token, vector)` pairs. First occurrence wins.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<LoadedTable, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::empty(dim)?;
        let mut warnings = Vec::new();
        for (i, (token, v)) in entries.into_iter().enumerate() {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            let token = token.into();
            if table.index.contains_key(&token) {
                warnings.push(format!("entry {}: duplicate token {token:?} ignored", i + 1));
                continue;
            }
            table.index.insert(token, table.index.len());
            table.vectors.extend_from_slice(&v);
        }
        table.recompute_mean_norm();
        Ok(LoadedTable { table, warnings })
    }

    pub fn load(path: &Path) -> Result<LoadedTable, EmbeddingError> {
        let io_err = |source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        Self::read(reader).map_err(|e| match e {
            EmbeddingError::Io { source, .. } => io_err(source),
            other => other,
        })
    }

    /// Parses GloVe text from any reader. The first non-blank line fixes `d`.
    pub fn read<R: BufRead>(reader: R) -> Result<LoadedTable, EmbeddingError> {
        let mut dim = None;
        let mut index = HashMap::new();
        let mut vectors = Vec::new();
        let mut warnings = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: PathBuf::new(),
                source,
            })?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|p| !p.is_empty());
            let token = parts.next().unwrap_or_default();
            let start = vectors.len();
            for p in parts {
                let x: f64 = p.parse().map_err(|_| EmbeddingError::NotNumeric {
                    line: lineno,
                    value: p.to_string(),
                })?;
                vectors.push(x);
            }
            let found = vectors.len() - start;
            let expected = *dim.get_or_insert(found);
            if found == 0 {
                return Err(EmbeddingError::MissingVector { line: lineno });
            }
            if found != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    line: lineno,
                    expected,
                    found,
                });
            }
            if index.contains_key(token) {
                warnings.push(format!("line {lineno}: duplicate token {token:?} ignored"));
                vectors.truncate(start);
                continue;
            }
            index.insert(token.to_string(), index.len());
        }
        let dim = dim.ok_or(EmbeddingError::ZeroDimension)?;
        for w in &warnings {
            log::warn!("{w}");
        }
        let mut table = Self {
            dim,
            index,
            vectors,
            mean_norm: 1.0,
        };
        table.recompute_mean_norm();
        Ok(LoadedTable { table, warnings })
    }

    fn recompute_mean_norm(&mut self) {
        if self.index.is_empty() {
            self.mean_norm = 1.0;
            return;
        }
        let total: f64 = self.vectors.chunks_exact(self.dim).map(euclidean_norm).sum();
        self.mean_norm = total / self.index.len() as f64;
        if self.mean_norm <= 0.0 {
            // All-zero table; keep the fallback scale usable.
            self.mean_norm = 1.0;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn mean_norm(&self) -> f64 {
        self.mean_norm
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }
}

/// Parameters of the character-hash encoder for out-of-vocabulary tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharFallbackConfig {
    pub ngram_len: usize,
    pub seed: u64,
}

impl Default for CharFallbackConfig {
    fn default() -> Self {
        Self {
            ngram_len: 3,
            seed: 0,
        }
    }
}

/// A table plus its fallback policy: the full token → vector function.
#[derive(Debug, Clone)]
pub struct Embedder {
    table: EmbeddingTable,
    fallback: CharFallbackConfig,
}

impl Embedder {
    pub fn new(table: EmbeddingTable, fallback: CharFallbackConfig) -> Self {
        assert!(fallback.ngram_len >= 1, "ngram_len must be at least 1");
        Self { table, fallback }
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn fallback(&self) -> CharFallbackConfig {
        self.fallback
    }

    pub fn dim(&self) -> usize {
        self.table.dim
    }

    pub fn embed_token(&self, token: &str) -> Vec<f64> {
        match self.table.get(token) {
            Some(v) => v.to_vec(),
            None => self.hash_token(token),
        }
    }

    fn hash_token(&self, token: &str) -> Vec<f64> {
        let d = self.table.dim;
        let n = self.fallback.ngram_len;
        let seed = self.fallback.seed;
        let mut chars: Vec<char> = Vec::with_capacity(token.chars().count() + 2);
        chars.push('^');
        chars.extend(token.chars());
        chars.push('$');

        let mut v = vec![0.0; d];
        let grams: Vec<&[char]> = if chars.len() <= n {
            vec![&chars[..]]
        } else {
            chars.windows(n).collect()
        };
        let mut buf = String::new();
        for gram in &grams {
            buf.clear();
            buf.extend(gram.iter());
            let h = hash_bytes(buf.as_bytes(), seed);
            let bucket = (h % d as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        for x in &mut v {
            *x /= grams.len() as f64;
        }
        let mut norm = euclidean_norm(&v);
        if norm == 0.0 {
            // Every gram cancelled out; fall back to a single signed bucket.
            let h = hash_bytes(token.as_bytes(), seed ^ 0xA5A5);
            v[(h % d as u64) as usize] = 1.0;
            norm = 1.0;
        }
        let scale = self.table.mean_norm / norm;
        for x in &mut v {
            *x *= scale;
        }
        v
    }

    /// One row per token; an empty sequence gives a `0 × d` matrix.
    pub fn embed_sequence<S: AsRef<str>>(&self, tokens: &[S]) -> Matrix {
        let mut m = Matrix::zeros(tokens.len(), self.dim());
        for (i, t) in tokens.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&self.embed_token(t.as_ref()));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> Embedder {
        let loaded = EmbeddingTable::read("the 0.1 0.2\ncat 0.3 0.4\n".as_bytes()).unwrap();
        Embedder::new(loaded.table, CharFallbackConfig::default())
    }

    #[test]
    fn reads_two_entries() {
        let e = small();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.table().len(), 2);
        assert_eq!(e.embed_token("cat"), vec![0.3, 0.4]);
    }

    #[test]
    fn dimension_mismatch_reports_line() {
        let err = EmbeddingTable::read("the 0.1 0.2\ncat 0.3\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::DimensionMismatch { line: 2, expected: 2, found: 1 }
        ));
    }

    #[test]
    fn non_numeric_coefficient() {
        let err = EmbeddingTable::read("the 0.1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbeddingError::NotNumeric { line: 1, .. }));
    }

    #[test]
    fn duplicates_keep_first() {
        let loaded = EmbeddingTable::read("a 1 0\na 0 1\n".as_bytes()).unwrap();
        assert_eq!(loaded.table.get("a"), Some(&[1.0, 0.0][..]));
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = EmbeddingTable::load(Path::new("/nonexistent/glove.txt")).unwrap_err();
        assert!(matches!(err, EmbeddingError::Io { .. }));
    }

    #[test]
    fn oov_is_deterministic_and_calibrated() {
        let e = small();
        let a = e.embed_token("zzqy");
        let b = e.embed_token("zzqy");
        assert_eq!(a, b);
        let expected = (0.1f64.hypot(0.2) + 0.3f64.hypot(0.4)) / 2.0;
        let mut sq = 0.0;
        for x in &a {
            sq += x * x;
        }
        assert!((sq.sqrt() - expected).abs() < 1e-9);
    }

    #[test]
    fn sequences() {
        let e = small();
        let empty: [&str; 0] = [];
        let m = e.embed_sequence(&empty);
        assert_eq!((m.rows(), m.cols()), (0, 2));
        let m = e.embed_sequence(&["cat", "cat"]);
        assert_eq!(m.row(0), m.row(1));
        assert_eq!(m.row(0), &[0.3, 0.4]);
    }

    proptest! {
        #[test]
        fn oov_norm_matches_mean_norm(tok in "\\PC{1,12}", seed in any::<u64>(), n in 1usize..6) {
            let loaded = EmbeddingTable::read("a 1 2 3 4 5\nb -1 0 0 2 1\n".as_bytes()).unwrap();
            let mean = loaded.table.mean_norm();
            let e = Embedder::new(loaded.table, CharFallbackConfig { ngram_len: n, seed });
            let v = e.embed_token(&tok);
            prop_assert_eq!(v.len(), 5);
            if tok != "a" && tok != "b" {
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - mean).abs() < 1e-9);
                prop_assert_eq!(v, e.embed_token(&tok));
            }
        }
    }
}
