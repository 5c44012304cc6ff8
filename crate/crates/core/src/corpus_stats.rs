//! Unigram and bigram frequency tables, before and after cleaning.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::preprocess::{collapse_spaces, strip_digits, strip_punct_and_special};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassFilter {
    Real,
    Fake,
    All,
}

impl ClassFilter {
    pub fn admits(self, label: Label) -> bool {
        match self {
            ClassFilter::Real => label == 0,
            ClassFilter::Fake => label == 1,
            ClassFilter::All => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassFilter::Real => "real",
            ClassFilter::Fake => "fake",
            ClassFilter::All => "all",
        }
    }
}

impl std::str::FromStr for ClassFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(ClassFilter::Real),
            "fake" => Ok(ClassFilter::Fake),
            "all" => Ok(ClassFilter::All),
            other => Err(Error::InvalidArgument(format!("unknown class filter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramTable {
    pub n: usize,
    pub rows: Vec<(String, u64)>,
    pub class_filter: ClassFilter,
}

impl NgramTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("ngram\tcount\n");
        for (gram, count) in &self.rows {
            out.push_str(&format!("{gram}\t{count}\n"));
        }
        out
    }
}

/// Counts every n-gram (n = 1 or 2). Bigrams never cross document
/// boundaries.
pub fn count_ngrams<D: AsRef<[String]>>(docs: &[D], n: usize) -> Result<HashMap<String, u64>> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidArgument(format!("n must be 1 or 2, got {n}")));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        for window in doc.as_ref().windows(n) {
            *counts.entry(window.join(" ")).or_default() += 1;
        }
    }
    Ok(counts)
}

/// Top-k n-grams by frequency; ties ordered lexicographically.
pub fn top_ngrams<D: AsRef<[String]>>(docs: &[D], n: usize, k: usize) -> Result<NgramTable> {
    top_ngrams_filtered(docs, None, n, k, ClassFilter::All)
}

/// As [`top_ngrams`], restricted to documents whose label passes `filter`.
pub fn top_ngrams_filtered<D: AsRef<[String]>>(
    docs: &[D],
    labels: Option<&[Label]>,
    n: usize,
    k: usize,
    filter: ClassFilter,
) -> Result<NgramTable> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let selected: Vec<&D> = match labels {
        Some(labels) => {
            if labels.len() != docs.len() {
                return Err(Error::DimensionMismatch {
                    expected: docs.len(),
                    got: labels.len(),
                });
            }
            docs.iter()
                .zip(labels)
                .filter(|(_, &l)| filter.admits(l))
                .map(|(d, _)| d)
                .collect()
        }
        None => docs.iter().collect(),
    };
    let selected: Vec<&[String]> = selected.into_iter().map(|d| d.as_ref()).collect();
    let counts = count_ngrams(&selected, n)?;
    let mut rows: Vec<(String, u64)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(k);
    Ok(NgramTable {
        n,
        rows,
        class_filter: filter,
    })
}

/// Minimal tokenization used for the "before cleaning" tables: lowercase,
/// strip digits and punctuation, collapse spaces, split on whitespace.
pub fn raw_tokens(text: &str) -> Vec<String> {
    let text = strip_digits(&text.to_lowercase());
    let text = collapse_spaces(&strip_punct_and_special(&text));
    text.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn unigrams_and_bigrams() {
        let docs = vec![doc(&["a", "b", "a"])];
        let t = top_ngrams(&docs, 1, 2).unwrap();
        assert_eq!(t.rows, vec![("a".into(), 2), ("b".into(), 1)]);
        let t = top_ngrams(&docs, 2, 3).unwrap();
        assert_eq!(t.rows, vec![("a b".into(), 1), ("b a".into(), 1)]);
    }

    #[test]
    fn bigrams_do_not_cross_documents() {
        let docs = vec![doc(&["x"]), doc(&["y"])];
        assert!(top_ngrams(&docs, 2, 5).unwrap().rows.is_empty());
    }

    #[test]
    fn invalid_n() {
        assert!(top_ngrams(&[doc(&["a"])], 3, 1).is_err());
    }

    #[test]
    fn unigram_total_and_class_split() {
        let docs = vec![doc(&["a", "b"]), doc(&["b", "c", "b"]), doc(&["a"])];
        let labels = [0, 1, 1];
        let all = top_ngrams(&docs, 1, 100).unwrap();
        let total: u64 = all.rows.iter().map(|r| r.1).sum();
        assert_eq!(total, 6);
        let real = top_ngrams_filtered(&docs, Some(&labels), 1, 100, ClassFilter::Real).unwrap();
        let fake = top_ngrams_filtered(&docs, Some(&labels), 1, 100, ClassFilter::Fake).unwrap();
        for (gram, count) in &all.rows {
            let r = real.rows.iter().find(|x| &x.0 == gram).map_or(0, |x| x.1);
            let f = fake.rows.iter().find(|x| &x.0 == gram).map_or(0, |x| x.1);
            assert_eq!(r + f, *count);
        }
    }

    #[test]
    fn raw_tokenization() {
        assert_eq!(raw_tokens("Of the 2 Things, Of!"), doc(&["of", "the", "things", "of"]));
    }
}
