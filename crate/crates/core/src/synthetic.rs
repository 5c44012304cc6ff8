//! Seeded toy datasets for sanity checks and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vectorize::{EncoderTag, FeatureMatrix};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn matrix(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows, labels, EncoderTag::Count).expect("rows have equal length")
}

/// `n` points in the plane, split by a random line through the origin, with
/// an empty band of width `margin` around the line. Labels alternate so the
/// classes are balanced.
pub fn separable_blobs(seed: u64, n: usize, margin: f64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (ux, uy) = (angle.cos(), angle.sin());
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as u8;
        let side = if y == 1 { 1.0 } else { -1.0 };
        // distance from the line, then position along it
        let d = margin / 2.0 + normal(&mut rng).abs() * 1.5;
        let t = normal(&mut rng) * 3.0;
        rows.push(vec![side * d * ux - t * uy, side * d * uy + t * ux]);
        labels.push(y);
    }
    matrix(rows, labels)
}

/// Four Gaussian clusters at `(+-1, +-1)`; label 1 when the coordinates have
/// opposite signs.
pub fn xor(seed: u64, n: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [(1.0, 1.0, 0u8), (-1.0, -1.0, 0), (1.0, -1.0, 1), (-1.0, 1.0, 1)];
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy, y) = centers[i % 4];
        rows.push(vec![cx + 0.3 * normal(&mut rng), cy + 0.3 * normal(&mut rng)]);
        labels.push(y);
    }
    matrix(rows, labels)
}

/// `inliers` points uniform in `[-1, 1]^2` followed by `outliers` points on
/// a circle of radius 10. Labels are all 0.
pub fn planted_outliers(seed: u64, inliers: usize, outliers: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = (0..inliers)
        .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    for k in 0..outliers {
        let a = phase + std::f64::consts::TAU * k as f64 / outliers.max(1) as f64;
        rows.push(vec![10.0 * a.cos(), 10.0 * a.sin()]);
    }
    let n = rows.len();
    matrix(rows, vec![0; n])
}

pub struct SynonymCorpus {
    pub sentences: Vec<Vec<String>>,
    pub synonyms: (String, String),
    /// Every distinct word, sorted.
    pub vocabulary: Vec<String>,
}

/// Sentences built from topic word pools. The two synonyms only ever occur
/// in one topic's sentences and share every context: each synonym sentence
/// is emitted twice, once per synonym.
pub fn synonym_corpus(seed: u64, n_sentences: usize) -> SynonymCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics: Vec<Vec<String>> = (0..8)
        .map(|t| (0..12).map(|w| format!("t{t}w{w}")).collect())
        .collect();
    let syn = ("synalpha".to_string(), "synbeta".to_string());
    let mut sentences = Vec::with_capacity(n_sentences);
    while sentences.len() < n_sentences {
        let topic = rng.gen_range(0..topics.len());
        let len = rng.gen_range(6..10);
        let mut words: Vec<String> = (0..len).map(|_| topics[topic].choose(&mut rng).unwrap().clone()).collect();
        if topic == 0 && sentences.len() + 2 <= n_sentences {
            let pos = rng.gen_range(0..=words.len());
            let mut a = words.clone();
            a.insert(pos, syn.0.clone());
            words.insert(pos, syn.1.clone());
            sentences.push(a);
        }
        sentences.push(words);
    }
    let mut vocabulary: Vec<String> = sentences.iter().flatten().cloned().collect();
    vocabulary.sort();
    vocabulary.dedup();
    SynonymCorpus {
        sentences,
        synonyms: syn,
        vocabulary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_respect_margin() {
        let x = separable_blobs(3, 200, 2.0);
        assert_eq!(x.n_rows, 200);
        assert_eq!(x.labels.iter().filter(|&&y| y == 1).count(), 100);
    }

    #[test]
    fn synonym_corpus_shape() {
        let c = synonym_corpus(1, 200);
        assert_eq!(c.sentences.len(), 200);
        let count = |w: &str| c.sentences.iter().flatten().filter(|t| *t == w).count();
        assert_eq!(count(&c.synonyms.0), count(&c.synonyms.1));
        assert!(count(&c.synonyms.0) > 5);
    }
}
