//! Document encoders: bag-of-words counts, TF-IDF, and mean-pooled
//! skip-gram embeddings.

mod bow;
mod vocab;
pub mod word2vec;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::preprocess::CleanDoc;

pub use bow::{count_vectorize, count_vectorize_with_budget, tfidf_vectorize, tfidf_vectorize_with_budget};
pub use vocab::{build_vocab, Vocabulary, DEFAULT_MAX_FEATURES};
pub use word2vec::{embed_doc, embed_sequence, train_word2vec, W2VModel, W2VParams};

/// Largest dense matrix (rows × columns) an encoder may allocate.
pub const DEFAULT_CELL_BUDGET: u64 = 400_000_000;

impl AsRef<[String]> for CleanDoc {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EncoderTag {
    #[default]
    Count,
    Tfidf,
    W2v,
    /// Word-level embedding sequences for the recurrent model.
    W2vSeq,
}

impl EncoderTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderTag::Count => "count",
            EncoderTag::Tfidf => "tfidf",
            EncoderTag::W2v => "w2v",
            EncoderTag::W2vSeq => "w2v_seq",
        }
    }
}

impl fmt::Display for EncoderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EncoderTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" | "cv" => Ok(EncoderTag::Count),
            "tfidf" => Ok(EncoderTag::Tfidf),
            "w2v" | "word2vec" => Ok(EncoderTag::W2v),
            "w2v_seq" => Ok(EncoderTag::W2vSeq),
            other => Err(Error::Config(format!("unknown encoder '{other}'"))),
        }
    }
}

/// Dense row-major matrix of encoded documents with aligned labels and ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
    pub labels: Vec<Label>,
    pub ids: Vec<u64>,
    pub encoder: EncoderTag,
}

impl FeatureMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize, encoder: EncoderTag, budget: u64) -> Result<Self> {
        check_budget(n_rows, n_cols, budget)?;
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
            labels: Vec::with_capacity(n_rows),
            ids: Vec::with_capacity(n_rows),
            encoder,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<Label>, encoder: EncoderTag) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for row in &rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(FeatureMatrix {
            n_rows: rows.len(),
            n_cols,
            data,
            ids: (0..rows.len() as u64).collect(),
            labels,
            encoder,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            data,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            encoder: self.encoder,
        }
    }

    /// Comma-separated floats per row with the label as the last column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows().enumerate() {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.labels[i]));
        }
        out
    }
}

pub(crate) fn check_budget(rows: usize, cols: usize, budget: u64) -> Result<()> {
    if (rows as u64).saturating_mul(cols as u64) > budget {
        Err(Error::CellBudget { rows, cols, budget })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_keeps_alignment() {
        let m = FeatureMatrix::from_rows(
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec![0, 1, 0],
            EncoderTag::Count,
        )
        .unwrap();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.labels, vec![0, 0]);
        assert_eq!(s.ids, vec![2, 0]);
        assert_eq!(m.to_csv().lines().next().unwrap(), "1,2,0");
    }

    #[test]
    fn budget_guard() {
        assert!(FeatureMatrix::zeros(1000, 1000, EncoderTag::Count, 999_999).is_err());
        assert!(FeatureMatrix::zeros(1000, 1000, EncoderTag::Count, 1_000_000).is_ok());
    }
}
