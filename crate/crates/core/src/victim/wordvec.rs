//! Bundled static word vectors and the mean-vector reference embedder.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::textproc::tokenize;
use crate::victim::{EmbeddingVector, TextEmbedder};

/// An in-memory word-vector table loaded from `wordvecs.txt` (one entry per
/// line: the word followed by space-separated decimals).
#[derive(Debug)]
pub struct WordVectors {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    vocab_hash: u64,
}

impl WordVectors {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = HashMap::new();
        let mut dim = 0usize;
        for (idx, line) in raw.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().ok_or_else(|| Error::ModelFormat {
                path: path.to_path_buf(),
                line: line_no,
                reason: "missing word".into(),
            })?;
            let values: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::ModelFormat {
                    path: path.to_path_buf(),
                    line: line_no,
                    reason: format!("bad number: {e}"),
                })?;
            if values.is_empty() {
                return Err(Error::ModelFormat {
                    path: path.to_path_buf(),
                    line: line_no,
                    reason: "no vector components".into(),
                });
            }
            if dim == 0 {
                dim = values.len();
            } else if values.len() != dim {
                return Err(Error::ModelFormat {
                    path: path.to_path_buf(),
                    line: line_no,
                    reason: format!("expected {dim} components, found {}", values.len()),
                });
            }
            table.insert(word.to_string(), values);
        }
        if table.is_empty() {
            return Err(Error::ModelFormat {
                path: path.to_path_buf(),
                line: 0,
                reason: "empty vector table".into(),
            });
        }

        // Hash over sorted entries so the fingerprint is independent of file
        // line order.
        let mut words: Vec<&String> = table.keys().collect();
        words.sort();
        let mut h = Fnv1a::new();
        h.update(&(dim as u64).to_le_bytes());
        for word in words {
            h.update(word.as_bytes()).update(b"\x1f");
            for v in &table[word] {
                h.update(&v.to_bits().to_le_bytes());
            }
        }

        Ok(WordVectors {
            dim,
            table,
            vocab_hash: h.finish(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.table.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.table.get(word).map(Vec::as_slice)
    }

    /// Fingerprint of the table contents; trained models store it so a model
    /// is never silently applied on top of different vectors.
    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    /// Vector lookups for each word token of `text`, in token order.
    /// Out-of-vocabulary words yield `None`.
    pub fn word_vectors_for(&self, text: &str) -> Vec<Option<&[f64]>> {
        tokenize(text)
            .tokens
            .iter()
            .filter(|t| t.is_word)
            .map(|t| self.get(&t.normalized))
            .collect()
    }

    /// Mean vector over in-vocabulary word tokens; the zero vector when no
    /// token is in vocabulary (including empty text).
    pub fn mean_embedding(&self, text: &str) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut count = 0usize;
        for vector in self.word_vectors_for(text).into_iter().flatten() {
            for (s, v) in sum.iter_mut().zip(vector) {
                *s += v;
            }
            count += 1;
        }
        if count > 0 {
            for s in &mut sum {
                *s /= count as f64;
            }
        }
        sum
    }
}

/// Embedder returning the mean static word vector of a text.
#[derive(Clone)]
pub struct ReferenceEmbedder {
    vectors: Arc<WordVectors>,
}

impl ReferenceEmbedder {
    pub fn new(vectors: Arc<WordVectors>) -> Self {
        ReferenceEmbedder { vectors }
    }

    pub fn vectors(&self) -> &Arc<WordVectors> {
        &self.vectors
    }
}

impl TextEmbedder for ReferenceEmbedder {
    fn dim(&self) -> usize {
        self.vectors.dim()
    }

    fn embed(&self, text: &str) -> EmbeddingVector {
        EmbeddingVector {
            values: self.vectors.mean_embedding(text),
        }
    }

    fn descriptor(&self) -> String {
        format!("mean-wordvec-{}d", self.vectors.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tiny_table(dir: &Path) -> WordVectors {
        let path = dir.join("vecs.txt");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, "good 1.0 0.0").unwrap();
        writeln!(f, "bad -1.0 0.0").unwrap();
        writeln!(f, "film 0.0 2.0").unwrap();
        WordVectors::load(&path).unwrap()
    }

    #[test]
    fn single_word_embeds_to_its_own_vector() {
        let dir = tempfile::tempdir().unwrap();
        let vecs = tiny_table(dir.path());
        assert_eq!(vecs.mean_embedding("good"), vec![1.0, 0.0]);
    }

    #[test]
    fn two_words_average_componentwise() {
        let dir = tempfile::tempdir().unwrap();
        let vecs = tiny_table(dir.path());
        assert_eq!(vecs.mean_embedding("good film"), vec![0.5, 1.0]);
    }

    #[test]
    fn oov_only_text_embeds_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let vecs = tiny_table(dir.path());
        assert_eq!(vecs.mean_embedding("zzz qqq"), vec![0.0, 0.0]);
        assert_eq!(vecs.mean_embedding(""), vec![0.0, 0.0]);
    }

    #[test]
    fn lookups_are_case_insensitive_via_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let vecs = tiny_table(dir.path());
        assert_eq!(vecs.mean_embedding("GOOD"), vec![1.0, 0.0]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "good 1.0 0.0\nbad -1.0\n").unwrap();
        assert!(matches!(
            WordVectors::load(&path),
            Err(Error::ModelFormat { line: 2, .. })
        ));
    }

    #[test]
    fn vocab_hash_ignores_line_order() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        fs::write(&a, "good 1.0\nbad -1.0\n").unwrap();
        fs::write(&b, "bad -1.0\ngood 1.0\n").unwrap();
        assert_eq!(
            WordVectors::load(&a).unwrap().vocab_hash(),
            WordVectors::load(&b).unwrap().vocab_hash()
        );
    }

    #[test]
    fn bundled_table_has_expected_shape() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wordvecs.txt");
        let vecs = WordVectors::load(&path).unwrap();
        assert_eq!(vecs.dim(), 50);
        assert_eq!(vecs.len(), 5000);
        assert!(!vecs.contains("unk"), "the deletion placeholder must stay out of vocabulary");
    }
}
