//! CART classification tree with Gini impurity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::vectorize::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other limits stop it.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Number of non-constant features examined per split; `None` = all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Fraction of positive training samples in the leaf.
    Leaf { value: f64, n_samples: usize },
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

/// Random stream for tree `index` of an ensemble seeded with `seed`.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Best {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl DecisionTree {
    /// Grows a tree on `rows` (indices into `x`, repeats allowed for
    /// bootstrap samples).
    pub fn fit(x: &FeatureMatrix, rows: &[usize], params: &TreeParams, rng: &mut ChaCha8Rng) -> DecisionTree {
        let mut builder = Builder {
            x,
            params,
            rng,
            features: (0..x.n_cols).collect(),
            nodes: Vec::new(),
            scratch: Vec::with_capacity(rows.len()),
        };
        builder.grow(rows.to_vec(), 0);
        DecisionTree { nodes: builder.nodes }
    }

    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { n_samples, .. } => Some(*n_samples),
                _ => None,
            })
            .collect()
    }
}

impl Classifier for DecisionTree {
    fn predict_score(&self, x: &[f64]) -> f64 {
        self.leaf_value(x)
    }
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    features: Vec<usize>,
    nodes: Vec<TreeNode>,
    scratch: Vec<(f64, u8)>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.x.labels[r] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: if n == 0 { 0.0 } else { pos as f64 / n as f64 },
            n_samples: n,
        });
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || n < self.params.min_samples_split || n < 2 * self.params.min_samples_leaf || pos == 0 || pos == n {
            return id;
        }
        let Some(best) = self.best_split(&rows, pos) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x.row(r)[best.feature] <= best.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Examines features in random order until `max_features` non-constant
    /// ones have been scored.
    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<Best> {
        let n = rows.len();
        let n_features = self.features.len();
        let budget = self.params.max_features.unwrap_or(n_features).max(1);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut examined = 0;
        let mut best: Option<Best> = None;

        for i in 0..n_features {
            if examined >= budget {
                break;
            }
            let j = self.rng.gen_range(i..n_features);
            self.features.swap(i, j);
            let f = self.features[i];

            self.scratch.clear();
            self.scratch.extend(rows.iter().map(|&r| (self.x.row(r)[f], self.x.labels[r])));
            let first = self.scratch[0].0;
            if self.scratch.iter().all(|&(v, _)| v == first) {
                continue;
            }
            examined += 1;
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_pos = 0usize;
            for k in 0..n - 1 {
                left_pos += usize::from(self.scratch[k].1 == 1);
                let left_n = k + 1;
                let (v, next) = (self.scratch[k].0, self.scratch[k + 1].0);
                if v == next || left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let impurity = (left_n as f64 * gini(left_pos, left_n)
                    + (n - left_n) as f64 * gini(pos - left_pos, n - left_n))
                    / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Best { feature: f, threshold, impurity });
                }
            }
        }
        best
    }
}
