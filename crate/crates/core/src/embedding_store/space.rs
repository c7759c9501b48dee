use std::collections::HashMap;

use crate::error::{Error, Result};

/// A dense query vector together with the word or word set it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub values: Vec<f64>,
    pub source: String,
}

impl QueryVector {
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> Self {
        QueryVector {
            values,
            source: source.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Result of averaging the vectors of several words.
#[derive(Debug, Clone)]
pub struct AveragedQuery {
    pub query: QueryVector,
    /// Words that had no vector and were left out of the mean.
    pub skipped: Vec<String>,
}

/// One decade's vocabulary of word vectors, all of the same dimensionality.
///
/// Vectors are stored row-major as `f32` (the precision of the word2vec
/// formats); every accessor that feeds numerical code widens to `f64`.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    decade: i32,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    duplicates: usize,
}

impl EmbeddingSpace {
    pub fn new(decade: i32, dim: usize) -> Result<Self> {
        if decade % 10 != 0 {
            return Err(Error::Input(format!(
                "decade label {decade} is not a multiple of 10"
            )));
        }
        if dim == 0 {
            return Err(Error::Input("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingSpace {
            decade,
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            duplicates: 0,
        })
    }

    /// Builds a space from `(word, vector)` rows. Duplicate words keep their
    /// first vector; later copies only bump [`duplicate_count`](Self::duplicate_count).
    pub fn from_rows<I, S>(decade: i32, dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut space = Self::new(decade, dim)?;
        for (word, values) in rows {
            let word = word.into();
            if values.len() != dim {
                return Err(Error::Format(format!(
                    "vector for `{word}` has {} entries, expected {dim}",
                    values.len()
                )));
            }
            let values: Vec<f32> = values.iter().map(|&v| v as f32).collect();
            space.push(word, &values)?;
        }
        space.finish()
    }

    /// Appends a row; returns `false` when the word was already present.
    pub(crate) fn push(&mut self, word: String, values: &[f32]) -> Result<bool> {
        debug_assert_eq!(values.len(), self.dim);
        if word.is_empty() {
            return Err(Error::Input("empty word in vocabulary".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite entry in vector for `{word}`")));
        }
        if self.index.contains_key(&word) {
            self.duplicates += 1;
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(values);
        Ok(true)
    }

    pub(crate) fn finish(self) -> Result<Self> {
        if self.words.is_empty() {
            return Err(Error::Input(format!(
                "embedding space for decade {} has an empty vocabulary",
                self.decade
            )));
        }
        if self.duplicates > 0 {
            log::warn!(
                "decade {}: {} duplicate vocabulary entries ignored (first occurrence kept)",
                self.decade,
                self.duplicates
            );
        }
        Ok(self)
    }

    pub fn decade(&self) -> i32 {
        self.decade
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Vocabulary in file order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Number of duplicate rows dropped while loading.
    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Raw stored row for `word`.
    pub fn row(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row_at(i))
    }

    pub(crate) fn row_at(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact lookup, no fallback or fuzzy matching.
    pub fn lookup(&self, word: &str) -> Option<QueryVector> {
        self.row(word).map(|row| {
            QueryVector::new(row.iter().map(|&v| f64::from(v)).collect(), word)
        })
    }

    /// Mean of the vectors of every word present; absent words are reported
    /// in [`AveragedQuery::skipped`].
    pub fn average_vector<S: AsRef<str>>(&self, words: &[S]) -> Result<AveragedQuery> {
        let mut sum = vec![0.0f64; self.dim];
        let mut found = 0usize;
        let mut skipped = Vec::new();
        for word in words {
            let word = word.as_ref();
            match self.row(word) {
                Some(row) => {
                    for (s, &v) in sum.iter_mut().zip(row) {
                        *s += f64::from(v);
                    }
                    found += 1;
                }
                None => skipped.push(word.to_string()),
            }
        }
        if found == 0 {
            return Err(Error::EmptyQuery(
                words.iter().map(|w| w.as_ref().to_string()).collect(),
            ));
        }
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        let source = words
            .iter()
            .map(|w| w.as_ref())
            .collect::<Vec<_>>()
            .join(" ");
        Ok(AveragedQuery {
            query: QueryVector::new(sum, source),
            skipped,
        })
    }

    /// Copy of this space with every vector scaled to unit L2 norm.
    /// Zero vectors are left as they are.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.dim) {
            let norm = row
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v = (f64::from(*v) / norm) as f32);
            }
        }
        out
    }

    /// Applies `f` to every row, producing a new space with the same vocabulary.
    pub(crate) fn map_rows<F>(&self, decade: i32, mut f: F) -> Self
    where
        F: FnMut(&[f32], &mut [f32]),
    {
        let mut data = vec![0.0f32; self.data.len()];
        for (src, dst) in self.data.chunks(self.dim).zip(data.chunks_mut(self.dim)) {
            f(src, dst);
        }
        EmbeddingSpace {
            decade,
            dim: self.dim,
            words: self.words.clone(),
            index: self.index.clone(),
            data,
            duplicates: self.duplicates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> EmbeddingSpace {
        EmbeddingSpace::from_rows(
            1990,
            3,
            vec![
                ("a", vec![1.0, 0.0, 0.0]),
                ("b", vec![0.0, 1.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lookup_hits_and_misses() {
        let space = abc();
        assert_eq!(space.lookup("a").unwrap().values, vec![1.0, 0.0, 0.0]);
        assert!(space.lookup("zzz").is_none());
        assert!(space.lookup("A").is_none());
    }

    #[test]
    fn average_of_two_is_midpoint() {
        let avg = abc().average_vector(&["a", "b"]).unwrap();
        assert_eq!(avg.query.values, vec![0.5, 0.5, 0.0]);
        assert!(avg.skipped.is_empty());
    }

    #[test]
    fn average_of_one_is_identity() {
        let avg = abc().average_vector(&["b"]).unwrap();
        assert_eq!(avg.query.values, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn average_skips_and_reports_missing() {
        let avg = abc().average_vector(&["a", "b", "zzz"]).unwrap();
        assert_eq!(avg.query.values, vec![0.5, 0.5, 0.0]);
        assert_eq!(avg.skipped, vec!["zzz".to_string()]);
        assert_eq!(avg.query.source, "a b zzz");
    }

    #[test]
    fn average_of_missing_words_fails() {
        let err = abc().average_vector(&["x", "y"]).unwrap_err();
        assert!(matches!(err, Error::EmptyQuery(_)));
    }

    #[test]
    fn rejects_bad_decade_and_dim() {
        assert!(EmbeddingSpace::new(1995, 3).is_err());
        assert!(EmbeddingSpace::new(1990, 0).is_err());
    }

    #[test]
    fn duplicates_keep_first() {
        let space = EmbeddingSpace::from_rows(
            1800,
            2,
            vec![("x", vec![1.0, 2.0]), ("x", vec![3.0, 4.0]), ("y", vec![0.0, 0.0])],
        )
        .unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.duplicate_count(), 1);
        assert_eq!(space.row("x").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn normalization_gives_unit_rows() {
        let space = EmbeddingSpace::from_rows(1800, 2, vec![("x", vec![3.0, 4.0])]).unwrap();
        let n = space.normalized();
        let row = n.row("x").unwrap();
        assert!((row[0] - 0.6).abs() < 1e-7 && (row[1] - 0.8).abs() < 1e-7);
    }
}
