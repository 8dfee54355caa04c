//! Embedding tables and the two on-disk formats they are read from.
//!
//! Binary layout (word2vec style): an ASCII header `"<count> <dim>\n"`, then
//! per entry the word bytes terminated by a single space and `dim`
//! little-endian IEEE-754 `f32` values. A newline after the floats is
//! optional.
//!
//! Text layout: an optional `"<count> <dim>"` first line, then one line per
//! word: the word followed by `dim` decimal values, single-space separated.

mod binary;
mod text;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use binary::{read_binary, write_binary};
pub use text::{read_text, write_text};

/// On-disk embedding format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary,
    Text,
}

impl Format {
    /// `.bin` files are binary, everything else is text.
    pub fn from_extension(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => Format::Binary,
            _ => Format::Text,
        }
    }
}

/// How words missing from the vocabulary are retried.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupPolicy {
    /// Retry with the lowercased form when the exact form is absent.
    pub case_fallback: bool,
}

/// A vocabulary-indexed dense matrix of word vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
    dim: usize,
    norms: Vec<f64>,
    normalized: bool,
    duplicates_dropped: usize,
    zero_rows_dropped: usize,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Builds a table from parallel words and row-major data.
    ///
    /// Later duplicates of a word are dropped and counted. Non-finite values
    /// are rejected.
    pub fn from_rows(words: Vec<String>, data: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidTable("dimension must be at least 1".into()));
        }
        if data.len() != words.len() * dim {
            return Err(Error::InvalidTable(format!(
                "{} words but {} values for dimension {dim}",
                words.len(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTable(format!(
                "non-finite value in row {} (`{}`)",
                pos / dim,
                words[pos / dim]
            )));
        }

        let mut index = HashMap::with_capacity(words.len());
        let mut kept_words = Vec::with_capacity(words.len());
        let mut kept = Vec::with_capacity(data.len());
        let mut duplicates = 0;
        for (word, row) in words.into_iter().zip(data.chunks_exact(dim)) {
            if index.contains_key(&word) {
                duplicates += 1;
                continue;
            }
            index.insert(word.clone(), kept_words.len());
            kept_words.push(word);
            kept.extend_from_slice(row);
        }
        if duplicates > 0 {
            warn!("dropped {duplicates} duplicate vocabulary entries (first occurrence kept)");
        }

        let norms = kept
            .chunks_exact(dim)
            .map(|r| T::dot_wide(r, r).sqrt())
            .collect();
        Ok(EmbeddingTable {
            words: kept_words,
            index,
            data: kept,
            dim,
            norms,
            normalized: false,
            duplicates_dropped: duplicates,
            zero_rows_dropped: 0,
        })
    }

    /// Rescales every row to unit norm. Zero rows cannot be normalized and
    /// are removed (counted in [`zero_rows_dropped`](Self::zero_rows_dropped)).
    pub fn into_normalized(self) -> Self {
        if self.normalized {
            return self;
        }
        let dim = self.dim;
        let mut words = Vec::with_capacity(self.words.len());
        let mut data = Vec::with_capacity(self.data.len());
        let mut zero = 0;
        for ((word, row), norm) in self
            .words
            .into_iter()
            .zip(self.data.chunks_exact(dim))
            .zip(&self.norms)
        {
            if *norm == 0.0 {
                zero += 1;
                continue;
            }
            words.push(word);
            data.extend(
                row.iter()
                    .map(|v| T::from_f64_lossy(v.to_f64().unwrap() / norm)),
            );
        }
        if zero > 0 {
            warn!("dropped {zero} zero-norm rows while normalizing");
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let norms = data
            .chunks_exact(dim)
            .map(|r| T::dot_wide(r, r).sqrt())
            .collect();
        EmbeddingTable {
            words,
            index,
            data,
            dim,
            norms,
            normalized: true,
            duplicates_dropped: self.duplicates_dropped,
            zero_rows_dropped: self.zero_rows_dropped + zero,
        }
    }

    /// Converts the storage scalar.
    pub fn cast<U: Scalar>(&self) -> EmbeddingTable<U> {
        let data: Vec<U> = self
            .data
            .iter()
            .map(|v| U::from_f64_lossy(v.to_f64().unwrap()))
            .collect();
        let norms = data
            .chunks_exact(self.dim)
            .map(|r| U::dot_wide(r, r).sqrt())
            .collect();
        EmbeddingTable {
            words: self.words.clone(),
            index: self.index.clone(),
            data,
            dim: self.dim,
            norms,
            normalized: self.normalized,
            duplicates_dropped: self.duplicates_dropped,
            zero_rows_dropped: self.zero_rows_dropped,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major storage.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Euclidean norm of each row, computed in `f64`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    pub fn zero_rows_dropped(&self) -> usize {
        self.zero_rows_dropped
    }

    /// Exact-match row index.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Row index of `word`, retrying lowercase when the policy allows.
    pub fn lookup_index(&self, word: &str, policy: LookupPolicy) -> Option<usize> {
        self.index_of(word).or_else(|| {
            if policy.case_fallback {
                let lower = word.to_lowercase();
                if lower != word {
                    return self.index_of(&lower);
                }
            }
            None
        })
    }

    pub fn lookup(&self, word: &str, policy: LookupPolicy) -> Option<&[T]> {
        self.lookup_index(word, policy).map(|i| self.row(i))
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::with_capacity(1 << 20, file))
}

fn finish<T: Scalar>(table: EmbeddingTable<T>, normalize: bool) -> EmbeddingTable<T> {
    if normalize {
        table.into_normalized()
    } else {
        table
    }
}

/// Loads a word2vec-style binary file.
pub fn load_binary<T: Scalar>(
    path: &Path,
    limit: Option<usize>,
    normalize: bool,
) -> Result<EmbeddingTable<T>> {
    let name = path.display().to_string();
    let table = read_binary(open(path)?, &name, limit)?;
    Ok(finish(table, normalize))
}

/// Loads a whitespace-separated text file (GloVe and friends).
pub fn load_text<T: Scalar>(
    path: &Path,
    limit: Option<usize>,
    normalize: bool,
) -> Result<EmbeddingTable<T>> {
    let name = path.display().to_string();
    let table = read_text(open(path)?, &name, limit)?;
    Ok(finish(table, normalize))
}

pub fn load<T: Scalar>(
    path: &Path,
    format: Format,
    limit: Option<usize>,
    normalize: bool,
) -> Result<EmbeddingTable<T>> {
    match format {
        Format::Binary => load_binary(path, limit, normalize),
        Format::Text => load_text(path, limit, normalize),
    }
}

/// Writes `table` to `path` in the given format.
pub fn save<T: Scalar>(table: &EmbeddingTable<T>, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Binary => write_binary(table, &mut w),
        Format::Text => write_text(table, &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable<f32> {
        EmbeddingTable::from_rows(
            vec!["Paris".into(), "paris".into(), "london".into()],
            vec![1.0, 0.0, 0.0, 1.0, 3.0, 4.0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn lookup_exact_match() {
        let t = table();
        assert_eq!(
            t.lookup("Paris", LookupPolicy::default()),
            Some(&[1.0f32, 0.0][..])
        );
    }

    #[test]
    fn lookup_case_fallback() {
        let t = table();
        let policy = LookupPolicy {
            case_fallback: true,
        };
        assert_eq!(t.lookup("PARIS", policy), Some(&[0.0f32, 1.0][..]));
        assert_eq!(t.lookup("PARIS", LookupPolicy::default()), None);
        assert_eq!(t.lookup("LONDON", policy), Some(&[3.0f32, 4.0][..]));
    }

    #[test]
    fn lookup_unknown_is_absent() {
        let t = table();
        assert!(t
            .lookup(
                "berlin",
                LookupPolicy {
                    case_fallback: true
                }
            )
            .is_none());
    }

    #[test]
    fn duplicates_keep_first() {
        let t = EmbeddingTable::from_rows(
            vec!["a".into(), "b".into(), "a".into()],
            vec![1.0f64, 2.0, 3.0],
            1,
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.row(t.index_of("a").unwrap()), &[1.0]);
        assert_eq!(t.duplicates_dropped(), 1);
    }

    #[test]
    fn rejects_non_finite() {
        let err = EmbeddingTable::from_rows(vec!["a".into()], vec![f32::NAN, 1.0], 2);
        assert!(matches!(err, Err(Error::InvalidTable(_))));
    }

    #[test]
    fn normalization_sets_unit_rows_and_drops_zero_rows() {
        let t = EmbeddingTable::from_rows(
            vec!["a".into(), "z".into(), "b".into()],
            vec![3.0f32, 4.0, 0.0, 0.0, 0.0, 2.0],
            2,
        )
        .unwrap()
        .into_normalized();
        assert!(t.normalized());
        assert_eq!(t.words(), &["a".to_string(), "b".to_string()]);
        assert_eq!(t.zero_rows_dropped(), 1);
        for n in t.norms() {
            assert!((n - 1.0).abs() < 1e-5);
        }
        assert_eq!(t.index_of("b"), Some(1));
    }
}
