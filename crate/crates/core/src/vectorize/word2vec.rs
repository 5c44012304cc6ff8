//! Skip-gram word embeddings trained with negative sampling, and
//! mean-pooled document vectors.
//!
//! Training is single-threaded so that a fixed seed always yields the same
//! vectors.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};

const KIND: &[u8; 4] = b"W2VM";
/// Floor for the linearly decaying learning rate, as a fraction of the start.
const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W2VParams {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negatives: usize,
    pub lr: f64,
    pub seed: u64,
    /// When set, documents with fewer tokens are left out of training.
    pub min_doc_len: Option<usize>,
}

impl Default for W2VParams {
    fn default() -> Self {
        W2VParams {
            dim: 100,
            window: 5,
            min_count: 5,
            epochs: 5,
            negatives: 5,
            lr: 0.025,
            seed: 0,
            min_doc_len: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "W2VRepr")]
pub struct W2VModel {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub dim: usize,
    /// `|V| x dim`, row-major. These are the word vectors.
    pub input_vectors: Vec<f64>,
    /// `|V| x dim` context vectors used only by the training objective.
    pub output_vectors: Vec<f64>,
    pub params: W2VParams,
    /// Mean loss per (center, context) pair for each epoch.
    pub epoch_losses: Vec<f64>,
    #[serde(skip_serializing)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct W2VRepr {
    words: Vec<String>,
    counts: Vec<u64>,
    dim: usize,
    input_vectors: Vec<f64>,
    output_vectors: Vec<f64>,
    params: W2VParams,
    epoch_losses: Vec<f64>,
}

impl From<W2VRepr> for W2VModel {
    fn from(r: W2VRepr) -> Self {
        let index = index_words(&r.words);
        W2VModel {
            words: r.words,
            counts: r.counts,
            dim: r.dim,
            input_vectors: r.input_vectors,
            output_vectors: r.output_vectors,
            params: r.params,
            epoch_losses: r.epoch_losses,
            index,
        }
    }
}

fn index_words(words: &[String]) -> HashMap<String, usize> {
    words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect()
}

impl W2VModel {
    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.input_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn word_vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.vector(i))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        codec::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        codec::load(path, KIND)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(sigmoid(x))` without overflow for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Samples word indices proportionally to `count^0.75`.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

pub fn train_word2vec<D: AsRef<[String]>>(docs: &[D], params: &W2VParams) -> Result<W2VModel> {
    if params.dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
    }
    if params.window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let training_docs: Vec<&[String]> = docs
        .iter()
        .map(|d| d.as_ref())
        .filter(|d| params.min_doc_len.is_none_or(|min| d.len() >= min))
        .collect();

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in &training_docs {
        for t in doc.iter() {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= params.min_count)
        .collect();
    if kept.is_empty() {
        return Err(Error::Empty(format!(
            "no word occurs at least min_count = {} times",
            params.min_count
        )));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|w| w.0.to_string()).collect();
    let counts: Vec<u64> = kept.iter().map(|w| w.1).collect();
    let index = index_words(&words);

    let sentences: Vec<Vec<usize>> = training_docs
        .iter()
        .map(|d| d.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();

    let dim = params.dim;
    let v = words.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let half = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..v * dim).map(|_| rng.gen_range(-half..half)).collect();
    let mut output = vec![0.0; v * dim];
    let sampler = NegativeSampler::new(&counts);

    let tokens_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let total_steps = (tokens_per_epoch * params.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut grad = vec![0.0; dim];

    for epoch in 0..params.epochs {
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = params.lr * (1.0 - processed as f64 / total_steps).max(MIN_LR_FRACTION);
                processed += 1;
                let reduced = rng.gen_range(0..params.window);
                let span = params.window - reduced;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(sentence.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = sentence[ctx_pos];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let center_vec = &mut input[center * dim..(center + 1) * dim];
                    for n in 0..=params.negatives {
                        let (target, label) = if n == 0 {
                            (context, 1.0)
                        } else {
                            let t = sampler.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out_vec = &mut output[target * dim..(target + 1) * dim];
                        let score: f64 = center_vec.iter().zip(out_vec.iter()).map(|(a, b)| a * b).sum();
                        loss -= if label == 1.0 { log_sigmoid(score) } else { log_sigmoid(-score) };
                        let g = (label - sigmoid(score)) * lr;
                        for k in 0..dim {
                            grad[k] += g * out_vec[k];
                            out_vec[k] += g * center_vec[k];
                        }
                    }
                    for (c, g) in center_vec.iter_mut().zip(&grad) {
                        *c += g;
                    }
                    pairs += 1;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { loss / pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                what: "word2vec loss".into(),
            });
        }
        epoch_losses.push(mean);
    }

    Ok(W2VModel {
        words,
        counts,
        dim,
        input_vectors: input,
        output_vectors: output,
        params: params.clone(),
        epoch_losses,
        index,
    })
}

/// Mean of the word vectors of in-model tokens; zero vector when none are
/// in the model.
pub fn embed_doc(model: &W2VModel, tokens: &[String]) -> Vec<f64> {
    let mut acc = vec![0.0; model.dim];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = model.word_vector(t) {
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
            n += 1;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

/// Word vectors of the first `max_len` in-model tokens, in order.
pub fn embed_sequence(model: &W2VModel, tokens: &[String], max_len: usize) -> Vec<Vec<f64>> {
    tokens
        .iter()
        .filter_map(|t| model.word_vector(t))
        .take(max_len)
        .map(<[f64]>::to_vec)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<String>> {
        let base = ["the quick brown fox jumps over the lazy dog", "a lazy dog sleeps in the sun"];
        (0..20)
            .map(|i| base[i % 2].split(' ').map(str::to_string).collect())
            .collect()
    }

    fn small_params(seed: u64) -> W2VParams {
        W2VParams {
            dim: 8,
            window: 2,
            min_count: 1,
            epochs: 3,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = train_word2vec(&corpus(), &small_params(3)).unwrap();
        let b = train_word2vec(&corpus(), &small_params(3)).unwrap();
        assert_eq!(a.input_vectors, b.input_vectors);
        let c = train_word2vec(&corpus(), &small_params(4)).unwrap();
        assert_ne!(a.input_vectors, c.input_vectors);
    }

    #[test]
    fn min_count_too_high() {
        let p = W2VParams { min_count: 1000, ..small_params(1) };
        assert!(matches!(train_word2vec(&corpus(), &p), Err(Error::Empty(_))));
    }

    #[test]
    fn min_doc_len_filters_training_docs() {
        let mut docs = corpus();
        docs.push(vec!["unique".into()]);
        let p = W2VParams { min_doc_len: Some(2), ..small_params(1) };
        let m = train_word2vec(&docs, &p).unwrap();
        assert!(m.index_of("unique").is_none());
    }

    #[test]
    fn loss_decreases_early() {
        let m = train_word2vec(&corpus(), &W2VParams { epochs: 5, ..small_params(9) }).unwrap();
        for w in m.epoch_losses[..3].windows(2) {
            assert!(w[1] <= w[0] * 1.05, "{:?}", m.epoch_losses);
        }
    }

    #[test]
    fn pooling() {
        let m = train_word2vec(&corpus(), &small_params(2)).unwrap();
        let fox = m.word_vector("fox").unwrap().to_vec();
        let dog = m.word_vector("dog").unwrap().to_vec();
        assert_eq!(embed_doc(&m, &["fox".into()]), fox);
        assert_eq!(embed_doc(&m, &["nope".into()]), vec![0.0; 8]);
        assert!(embed_doc(&m, &[]).iter().all(|&x| x == 0.0));
        let mean = embed_doc(&m, &["fox".into(), "dog".into(), "nope".into()]);
        for k in 0..8 {
            assert!((mean[k] - (fox[k] + dog[k]) / 2.0).abs() < 1e-15);
        }
        let seq = embed_sequence(&m, &["fox".into(), "nope".into(), "dog".into()], 1);
        assert_eq!(seq, vec![fox]);
    }

    #[test]
    fn serde_round_trip() {
        let m = train_word2vec(&corpus(), &small_params(2)).unwrap();
        let bytes = codec::encode(KIND, &m).unwrap();
        let back: W2VModel = codec::decode(KIND, &bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.index_of("fox"), m.index_of("fox"));
    }
}
