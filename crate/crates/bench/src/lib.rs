//! Synthetic inputs shared by the benchmarks.

use fakenews_core::{CleanDoc, EncoderTag, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` documents of `len` tokens drawn uniformly from a `vocab`-word
/// lexicon.
pub fn random_docs(seed: u64, n: usize, len: usize, vocab: usize) -> Vec<CleanDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| CleanDoc {
            id: i as u64,
            tokens: (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect(),
            label: (i % 2) as u8,
        })
        .collect()
}

/// Gaussian-ish rows whose first coordinate is shifted by the label.
pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u8> = (0..rows).map(|i| (i % 2) as u8).collect();
    let data: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            (0..cols)
                .map(|j| rng.gen_range(-1.0..1.0) + if j == 0 { f64::from(l) * 2.0 } else { 0.0 })
                .collect()
        })
        .collect();
    FeatureMatrix::from_rows(data, labels, EncoderTag::Count).expect("rows and labels align")
}
