//! Isolation forest anomaly scoring and contamination-based row removal.
//!
//! Each tree is grown on a subsample drawn without replacement, splitting on
//! a random non-constant feature at a uniform value strictly inside its
//! range, until the height limit `ceil(log2 psi)` is reached. Short average
//! isolation paths mean anomalous rows.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorize::{EncoderTag, FeatureMatrix};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EXACT_HARMONIC_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoForestParams {
    pub n_trees: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for IsoForestParams {
    fn default() -> Self {
        IsoForestParams {
            n_trees: 100,
            subsample: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IsoNode {
    Leaf { size: usize },
    Split { feature: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoTree {
    /// Arena of nodes; index 0 is the root.
    pub nodes: Vec<IsoNode>,
}

impl IsoTree {
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[IsoNode], i: usize) -> usize {
            match nodes[i] {
                IsoNode::Leaf { .. } => 0,
                IsoNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Depth at which `x` lands plus the expected remaining depth of an
    /// unbuilt subtree holding the leaf's samples.
    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        let mut depth = 0usize;
        loop {
            match self.nodes[i] {
                IsoNode::Leaf { size } => return depth as f64 + average_path_length(size),
                IsoNode::Split { feature, value, left, right } => {
                    i = if x[feature] < value { left } else { right };
                    depth += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoForest {
    pub trees: Vec<IsoTree>,
    pub n_trees: usize,
    pub subsample_size: usize,
    pub height_limit: usize,
    pub n_features: usize,
    pub seed: u64,
}

/// Harmonic number `H(k)`; summed exactly up to 10^4 terms, asymptotic
/// expansion beyond.
pub fn harmonic(k: usize) -> f64 {
    if k <= EXACT_HARMONIC_LIMIT {
        (1..=k).map(|i| 1.0 / i as f64).sum()
    } else {
        let k = k as f64;
        k.ln() + EULER_GAMMA + 1.0 / (2.0 * k) - 1.0 / (12.0 * k * k)
    }
}

/// Average unsuccessful-search path length in a binary search tree of `n`
/// nodes: `c(n) = 2H(n-1) - 2(n-1)/n`, with `c(1) = c(0) = 0`.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        2.0 * harmonic(n - 1) - 2.0 * (n - 1) as f64 / n as f64
    }
}

/// Score for an average path length `mean_path` in a forest with subsample `psi`.
pub fn score_from_path(mean_path: f64, psi: usize) -> f64 {
    2f64.powf(-mean_path / average_path_length(psi))
}

pub fn fit_isolation_forest(x: &FeatureMatrix, params: &IsoForestParams) -> Result<IsoForest> {
    if x.n_rows < 2 {
        return Err(Error::InvalidArgument(format!(
            "isolation forest needs at least 2 rows, got {}",
            x.n_rows
        )));
    }
    if params.n_trees == 0 || params.subsample < 2 {
        return Err(Error::InvalidArgument("need n_trees >= 1 and subsample >= 2".into()));
    }
    let psi = params.subsample.min(x.n_rows);
    let height_limit = (psi as f64).log2().ceil() as usize;
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let rows = sample(&mut rng, x.n_rows, psi).into_vec();
            let mut builder = TreeBuilder {
                x,
                rng,
                features: (0..x.n_cols).collect(),
                nodes: Vec::new(),
                height_limit,
            };
            builder.grow(rows, 0);
            IsoTree { nodes: builder.nodes }
        })
        .collect();
    Ok(IsoForest {
        trees,
        n_trees: params.n_trees,
        subsample_size: psi,
        height_limit,
        n_features: x.n_cols,
        seed: params.seed,
    })
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    rng: ChaCha8Rng,
    features: Vec<usize>,
    nodes: Vec<IsoNode>,
    height_limit: usize,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(IsoNode::Leaf { size: rows.len() });
        if depth >= self.height_limit || rows.len() <= 1 {
            return id;
        }
        let Some((feature, lo, hi)) = self.pick_feature(&rows) else {
            return id;
        };
        let value = loop {
            let v = self.rng.gen_range(lo..hi);
            if v > lo {
                break v;
            }
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| self.x.row(r)[feature] < value);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = IsoNode::Split { feature, value, left, right };
        id
    }

    /// Visits features in random order and returns the first one that is
    /// not constant over `rows`, with its range.
    fn pick_feature(&mut self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let n = self.features.len();
        for i in 0..n {
            let j = self.rng.gen_range(i..n);
            self.features.swap(i, j);
            let f = self.features[i];
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = self.x.row(r)[f];
                (lo.min(v), hi.max(v))
            });
            if hi > lo {
                return Some((f, lo, hi));
            }
        }
        None
    }
}

impl IsoForest {
    pub fn mean_path_length(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64)
    }

    pub fn anomaly_score(&self, x: &[f64]) -> Result<f64> {
        Ok(score_from_path(self.mean_path_length(x)?, self.subsample_size))
    }

    pub fn score_all(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        (0..x.n_rows)
            .into_par_iter()
            .map(|i| self.anomaly_score(x.row(i)))
            .collect()
    }
}

pub fn anomaly_score(forest: &IsoForest, x: &[f64]) -> Result<f64> {
    forest.anomaly_score(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub encoder: EncoderTag,
    pub rows_before: usize,
    pub rows_after: usize,
    pub removed_ids: Vec<u64>,
}

impl OutlierReport {
    pub fn percent_removed(&self) -> f64 {
        if self.rows_before == 0 {
            0.0
        } else {
            100.0 * (self.rows_before - self.rows_after) as f64 / self.rows_before as f64
        }
    }

    pub const TSV_HEADER: &'static str = "encoder\trows_before\trows_after\tpercent_removed\n";

    pub fn tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.4}\n",
            self.encoder,
            self.rows_before,
            self.rows_after,
            self.percent_removed()
        )
    }
}

fn check_contamination(contamination: f64) -> Result<()> {
    if (0.0..0.5).contains(&contamination) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "contamination must lie in [0, 0.5), got {contamination}"
        )))
    }
}

/// Row indices of the `floor(contamination * m)` highest-scoring rows,
/// ties resolved toward the lower index.
pub fn outlier_indices(x: &FeatureMatrix, contamination: f64, params: &IsoForestParams) -> Result<Vec<usize>> {
    check_contamination(contamination)?;
    let n_remove = (contamination * x.n_rows as f64).floor() as usize;
    if n_remove == 0 {
        return Ok(Vec::new());
    }
    let forest = fit_isolation_forest(x, params)?;
    let scores = forest.score_all(x)?;
    let mut order: Vec<usize> = (0..x.n_rows).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(n_remove);
    order.sort_unstable();
    Ok(order)
}

/// Drops the highest-scoring rows, keeping rows and labels aligned.
pub fn remove_outliers(
    x: &FeatureMatrix,
    contamination: f64,
    params: &IsoForestParams,
) -> Result<(FeatureMatrix, OutlierReport)> {
    let drop = outlier_indices(x, contamination, params)?;
    let keep: Vec<usize> = (0..x.n_rows).filter(|i| drop.binary_search(i).is_err()).collect();
    let kept = x.select_rows(&keep);
    let report = OutlierReport {
        encoder: x.encoder,
        rows_before: x.n_rows,
        rows_after: kept.n_rows,
        removed_ids: drop.iter().map(|&i| x.ids[i]).collect(),
    };
    Ok((kept, report))
}
