use super::{EncoderTag, FeatureMatrix, Vocabulary, DEFAULT_CELL_BUDGET};
use crate::error::Result;
use crate::preprocess::CleanDoc;

pub fn count_vectorize(docs: &[CleanDoc], vocab: &Vocabulary) -> Result<FeatureMatrix> {
    count_vectorize_with_budget(docs, vocab, DEFAULT_CELL_BUDGET)
}

/// `A[i][j]` = occurrences of vocabulary term `j` in document `i`.
/// Out-of-vocabulary tokens are ignored.
pub fn count_vectorize_with_budget(docs: &[CleanDoc], vocab: &Vocabulary, budget: u64) -> Result<FeatureMatrix> {
    let mut m = FeatureMatrix::zeros(docs.len(), vocab.len(), EncoderTag::Count, budget)?;
    for (i, doc) in docs.iter().enumerate() {
        let row = m.row_mut(i);
        for t in &doc.tokens {
            if let Some(j) = vocab.index_of(t) {
                row[j] += 1.0;
            }
        }
        m.labels.push(doc.label);
        m.ids.push(doc.id);
    }
    Ok(m)
}

pub fn tfidf_vectorize(docs: &[CleanDoc], vocab: &Vocabulary) -> Result<FeatureMatrix> {
    tfidf_vectorize_with_budget(docs, vocab, DEFAULT_CELL_BUDGET)
}

/// `w(t, d) = n(t, d) / |d| * ln(N / df(t))`, where `|d|` counts every token
/// of the document (including out-of-vocabulary ones) and `N`, `df` come
/// from the fitted vocabulary.
pub fn tfidf_vectorize_with_budget(docs: &[CleanDoc], vocab: &Vocabulary, budget: u64) -> Result<FeatureMatrix> {
    let mut m = count_vectorize_with_budget(docs, vocab, budget)?;
    m.encoder = EncoderTag::Tfidf;
    let idf: Vec<f64> = (0..vocab.len()).map(|j| vocab.idf(j)).collect();
    for (i, doc) in docs.iter().enumerate() {
        let len = doc.tokens.len();
        let row = m.row_mut(i);
        if len == 0 {
            continue;
        }
        for (v, w) in row.iter_mut().zip(&idf) {
            if *v != 0.0 {
                *v = *v / len as f64 * w;
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::build_vocab;

    fn doc(id: u64, words: &[&str]) -> CleanDoc {
        CleanDoc {
            id,
            tokens: words.iter().map(|s| s.to_string()).collect(),
            label: 0,
        }
    }

    fn toy() -> Vec<CleanDoc> {
        vec![
            doc(1, &["cat", "sat", "mat"]),
            doc(2, &["cat", "cat", "ran"]),
            doc(3, &["dog", "ran"]),
        ]
    }

    #[test]
    fn counts() {
        let docs = toy();
        let v = build_vocab(&docs, 10).unwrap();
        let m = count_vectorize(&docs, &v).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(m.row(1), &[2.0, 0.0, 0.0, 1.0, 0.0]);
        let oov = count_vectorize(&[doc(9, &["zebra", "yak"])], &v).unwrap();
        assert!(oov.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tfidf_hand_values() {
        let docs = toy();
        let v = build_vocab(&docs, 10).unwrap();
        let m = tfidf_vectorize(&docs, &v).unwrap();
        assert!((m.row(0)[0] - (1.0 / 3.0) * 1.5f64.ln()).abs() < 1e-12);
        assert!((m.row(0)[0] - 0.13516).abs() < 1e-5);
        assert!((m.row(2)[1] - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!((m.row(2)[1] - 0.54931).abs() < 1e-5);
    }

    #[test]
    fn ubiquitous_term_has_zero_column() {
        let docs = vec![doc(1, &["a", "b"]), doc(2, &["a"]), doc(3, &["a", "c"])];
        let v = build_vocab(&docs, 10).unwrap();
        let m = tfidf_vectorize(&docs, &v).unwrap();
        assert!(m.rows().all(|r| r[0] == 0.0));
    }

    #[test]
    fn oov_tokens_count_in_length() {
        let docs = toy();
        let v = build_vocab(&docs, 10).unwrap();
        let m = tfidf_vectorize(&[doc(7, &["dog", "zebra"])], &v).unwrap();
        assert!((m.row(0)[1] - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert_eq!(v.total_docs(), 3);
    }
}
