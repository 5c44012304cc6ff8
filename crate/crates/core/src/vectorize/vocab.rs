use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_FEATURES: usize = 10_000;
const KIND: &[u8; 4] = b"VOCB";

/// Term index and document frequencies frozen at fit time. Encoding
/// held-out documents never touches these statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    total_docs: u64,
    max_features: usize,
    #[serde(skip_serializing)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    total_docs: u64,
    max_features: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let mut v = Vocabulary {
            terms: r.terms,
            doc_freq: r.doc_freq,
            total_docs: r.total_docs,
            max_features: r.max_features,
            index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Natural-log inverse document frequency of column `j`.
    pub fn idf(&self, j: usize) -> f64 {
        (self.total_docs as f64 / self.doc_freq[j] as f64).ln()
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    /// `term<TAB>index<TAB>doc_freq` per line.
    pub fn dump(&self) -> String {
        self.terms
            .iter()
            .zip(&self.doc_freq)
            .enumerate()
            .map(|(i, (t, df))| format!("{t}\t{i}\t{df}\n"))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        codec::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        codec::load(path, KIND)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        codec::decode(KIND, bytes)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        codec::encode(KIND, self)
    }
}

/// Keeps the `max_features` most frequent terms by total count (ties broken
/// lexicographically) and indexes them alphabetically.
pub fn build_vocab<D: AsRef<[String]>>(docs: &[D], max_features: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Empty("cannot build a vocabulary from zero documents".into()));
    }
    if max_features == 0 {
        return Err(Error::InvalidArgument("max_features must be >= 1".into()));
    }
    let mut stats: HashMap<&str, (u64, u64)> = HashMap::new();
    for doc in docs {
        let tokens = doc.as_ref();
        for t in tokens {
            stats.entry(t.as_str()).or_default().0 += 1;
        }
        let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            stats.get_mut(t).unwrap().1 += 1;
        }
    }
    let mut ranked: Vec<(&str, u64, u64)> = stats.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_features);
    ranked.sort_by(|a, b| a.0.cmp(b.0));

    let mut vocab = Vocabulary {
        terms: ranked.iter().map(|r| r.0.to_string()).collect(),
        doc_freq: ranked.iter().map(|r| r.2).collect(),
        total_docs: docs.len() as u64,
        max_features,
        index: HashMap::new(),
    };
    vocab.rebuild_index();
    Ok(vocab)
}
