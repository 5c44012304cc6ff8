//! Encoder configuration, fitted encoder state and the feature sets they
//! produce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::outlier::{outlier_indices, IsoForestParams, OutlierReport};
use crate::preprocess::CleanDoc;
use crate::vectorize::{
    build_vocab, check_budget, count_vectorize_with_budget, embed_doc, embed_sequence, tfidf_vectorize_with_budget,
    train_word2vec, EncoderTag, FeatureMatrix, Vocabulary, W2VModel, W2VParams,
};

pub const DEFAULT_SEQUENCE_LEN: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EncoderConfig {
    Count { max_features: usize },
    Tfidf { max_features: usize },
    W2v { params: W2VParams },
    /// Per-word vectors of the first `max_len` in-model tokens.
    W2vSeq { params: W2VParams, max_len: usize },
}

impl EncoderConfig {
    pub fn tag(&self) -> EncoderTag {
        match self {
            EncoderConfig::Count { .. } => EncoderTag::Count,
            EncoderConfig::Tfidf { .. } => EncoderTag::Tfidf,
            EncoderConfig::W2v { .. } => EncoderTag::W2v,
            EncoderConfig::W2vSeq { .. } => EncoderTag::W2vSeq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedEncoder {
    Count(Vocabulary),
    Tfidf(Vocabulary),
    W2v(W2VModel),
    W2vSeq { model: W2VModel, max_len: usize },
}

/// Fits an encoder on `docs`. `seed` replaces the Word2Vec seed.
pub fn fit_encoder(config: &EncoderConfig, docs: &[CleanDoc], seed: u64) -> Result<FittedEncoder> {
    if docs.is_empty() {
        return Err(Error::Empty("no documents to fit the encoder on".into()));
    }
    Ok(match config {
        EncoderConfig::Count { max_features } => FittedEncoder::Count(build_vocab(docs, *max_features)?),
        EncoderConfig::Tfidf { max_features } => FittedEncoder::Tfidf(build_vocab(docs, *max_features)?),
        EncoderConfig::W2v { params } => FittedEncoder::W2v(train_word2vec(docs, &W2VParams { seed, ..params.clone() })?),
        EncoderConfig::W2vSeq { params, max_len } => FittedEncoder::W2vSeq {
            model: train_word2vec(docs, &W2VParams { seed, ..params.clone() })?,
            max_len: *max_len,
        },
    })
}

impl FittedEncoder {
    pub fn tag(&self) -> EncoderTag {
        match self {
            FittedEncoder::Count(_) => EncoderTag::Count,
            FittedEncoder::Tfidf(_) => EncoderTag::Tfidf,
            FittedEncoder::W2v(_) => EncoderTag::W2v,
            FittedEncoder::W2vSeq { .. } => EncoderTag::W2vSeq,
        }
    }

    /// Width of one encoded row (or of one sequence step).
    pub fn dim(&self) -> usize {
        match self {
            FittedEncoder::Count(v) | FittedEncoder::Tfidf(v) => v.len(),
            FittedEncoder::W2v(m) | FittedEncoder::W2vSeq { model: m, .. } => m.dim,
        }
    }

    pub fn transform(&self, docs: &[CleanDoc], budget: u64) -> Result<Features> {
        Ok(match self {
            FittedEncoder::Count(v) => Features::Dense(count_vectorize_with_budget(docs, v, budget)?),
            FittedEncoder::Tfidf(v) => Features::Dense(tfidf_vectorize_with_budget(docs, v, budget)?),
            FittedEncoder::W2v(m) => {
                let mut x = FeatureMatrix::zeros(docs.len(), m.dim, EncoderTag::W2v, budget)?;
                for (i, d) in docs.iter().enumerate() {
                    x.row_mut(i).copy_from_slice(&embed_doc(m, &d.tokens));
                    x.labels.push(d.label);
                    x.ids.push(d.id);
                }
                Features::Dense(x)
            }
            FittedEncoder::W2vSeq { model, max_len } => {
                let seqs: Vec<Vec<Vec<f64>>> = docs.iter().map(|d| embed_sequence(model, &d.tokens, *max_len)).collect();
                let steps: usize = seqs.iter().map(Vec::len).sum();
                check_budget(steps, model.dim, budget)?;
                Features::Seq(SeqData {
                    seqs,
                    labels: docs.iter().map(|d| d.label).collect(),
                    ids: docs.iter().map(|d| d.id).collect(),
                    dim: model.dim,
                })
            }
        })
    }

    /// Encodes the tokens of a single document.
    pub fn encode_tokens(&self, tokens: &[String]) -> Result<Features> {
        let doc = CleanDoc {
            id: 0,
            tokens: tokens.to_vec(),
            label: 0,
        };
        self.transform(std::slice::from_ref(&doc), u64::MAX)
    }

    pub fn summary(&self) -> String {
        match self {
            FittedEncoder::Count(v) | FittedEncoder::Tfidf(v) => format!(
                "{} vocabulary: {} terms (cap {}), fitted on {} documents",
                self.tag(),
                v.len(),
                v.max_features(),
                v.total_docs()
            ),
            FittedEncoder::W2v(m) => format!("w2v: {} words, dimension {}", m.vocab_size(), m.dim),
            FittedEncoder::W2vSeq { model, max_len } => format!(
                "w2v_seq: {} words, dimension {}, up to {max_len} steps",
                model.vocab_size(),
                model.dim
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqData {
    pub seqs: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<Label>,
    pub ids: Vec<u64>,
    pub dim: usize,
}

/// Encoded documents: one dense row each, or one sequence of word vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Features {
    Dense(FeatureMatrix),
    Seq(SeqData),
}

impl Features {
    pub fn n_rows(&self) -> usize {
        match self {
            Features::Dense(x) => x.n_rows,
            Features::Seq(s) => s.seqs.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Features::Dense(x) => x.n_cols,
            Features::Seq(s) => s.dim,
        }
    }

    pub fn labels(&self) -> &[Label] {
        match self {
            Features::Dense(x) => &x.labels,
            Features::Seq(s) => &s.labels,
        }
    }

    pub fn ids(&self) -> &[u64] {
        match self {
            Features::Dense(x) => &x.ids,
            Features::Seq(s) => &s.ids,
        }
    }

    pub fn encoder(&self) -> EncoderTag {
        match self {
            Features::Dense(x) => x.encoder,
            Features::Seq(_) => EncoderTag::W2vSeq,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Features {
        match self {
            Features::Dense(x) => Features::Dense(x.select_rows(indices)),
            Features::Seq(s) => Features::Seq(SeqData {
                seqs: indices.iter().map(|&i| s.seqs[i].clone()).collect(),
                labels: indices.iter().map(|&i| s.labels[i]).collect(),
                ids: indices.iter().map(|&i| s.ids[i]).collect(),
                dim: s.dim,
            }),
        }
    }

    /// Dense view: the matrix itself, or the mean of each sequence's steps.
    pub fn pooled(&self) -> FeatureMatrix {
        match self {
            Features::Dense(x) => x.clone(),
            Features::Seq(s) => {
                let mut data = Vec::with_capacity(s.seqs.len() * s.dim);
                for seq in &s.seqs {
                    data.extend(mean_step(seq, s.dim));
                }
                FeatureMatrix {
                    n_rows: s.seqs.len(),
                    n_cols: s.dim,
                    data,
                    labels: s.labels.clone(),
                    ids: s.ids.clone(),
                    encoder: EncoderTag::W2vSeq,
                }
            }
        }
    }
}

pub(crate) fn mean_step(seq: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for step in seq {
        mean.iter_mut().zip(step).for_each(|(a, b)| *a += b);
    }
    if !seq.is_empty() {
        mean.iter_mut().for_each(|a| *a /= seq.len() as f64);
    }
    mean
}

/// Removes the `floor(contamination * m)` most anomalous rows. Sequences
/// are scored on their mean-pooled vectors.
pub fn remove_outlier_rows(
    features: Features,
    contamination: f64,
    params: &IsoForestParams,
) -> Result<(Features, OutlierReport)> {
    let encoder = features.encoder();
    let rows_before = features.n_rows();
    if contamination == 0.0 || rows_before == 0 {
        let report = OutlierReport {
            encoder,
            rows_before,
            rows_after: rows_before,
            removed_ids: Vec::new(),
        };
        return Ok((features, report));
    }
    let drop = match &features {
        Features::Dense(x) => outlier_indices(x, contamination, params)?,
        Features::Seq(_) => outlier_indices(&features.pooled(), contamination, params)?,
    };
    let keep: Vec<usize> = (0..rows_before).filter(|i| drop.binary_search(i).is_err()).collect();
    let removed_ids = drop.iter().map(|&i| features.ids()[i]).collect();
    let kept = features.select(&keep);
    let report = OutlierReport {
        encoder,
        rows_before,
        rows_after: kept.n_rows(),
        removed_ids,
    };
    Ok((kept, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: u64, text: &str, label: Label) -> CleanDoc {
        CleanDoc {
            id,
            tokens: text.split(' ').map(str::to_string).collect(),
            label,
        }
    }

    #[test]
    fn dense_encoders_keep_ids() {
        let docs = vec![doc(7, "cat sat mat", 0), doc(9, "dog ran", 1)];
        let enc = fit_encoder(&EncoderConfig::Tfidf { max_features: 10 }, &docs, 0).unwrap();
        let f = enc.transform(&docs, u64::MAX).unwrap();
        assert_eq!(f.ids(), &[7, 9]);
        assert_eq!(f.labels(), &[0, 1]);
        assert_eq!(f.dim(), 5);
    }

    #[test]
    fn sequences_truncate_and_pool() {
        let docs: Vec<CleanDoc> = (0..20).map(|i| doc(i, "alpha beta gamma alpha beta", (i % 2) as u8)).collect();
        let params = W2VParams { dim: 4, min_count: 1, epochs: 1, ..Default::default() };
        let enc = fit_encoder(&EncoderConfig::W2vSeq { params, max_len: 3 }, &docs, 1).unwrap();
        let f = enc.transform(&docs[..2], u64::MAX).unwrap();
        let Features::Seq(s) = &f else { panic!("expected sequences") };
        assert_eq!(s.seqs[0].len(), 3);
        let pooled = f.pooled();
        assert_eq!(pooled.n_cols, 4);
        assert_eq!(pooled.row(0), mean_step(&s.seqs[0], 4).as_slice());
    }

    #[test]
    fn outlier_removal_keeps_alignment() {
        let mut rows: Vec<Vec<f64>> = (0..19).map(|i| vec![(i % 5) as f64 * 0.1, 0.0]).collect();
        rows.push(vec![50.0, 50.0]);
        let labels: Vec<Label> = (0..20).map(|i| (i % 2) as u8).collect();
        let mut x = FeatureMatrix::from_rows(rows, labels, EncoderTag::Count).unwrap();
        x.ids = (100..120).collect();
        let (kept, report) = remove_outlier_rows(Features::Dense(x), 0.05, &IsoForestParams::default()).unwrap();
        assert_eq!(report.removed_ids, vec![119]);
        assert_eq!(kept.n_rows(), 19);
        for (i, &id) in kept.ids().iter().enumerate() {
            assert_eq!(u64::from(kept.labels()[i]), (id - 100) % 2);
        }
    }
}
