use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{tree_rng, DecisionTree, TreeParams};
use super::{check_finite, check_labels, Classifier};
use crate::error::{Error, Result};
use crate::vectorize::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means `ceil(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 200,
            max_depth: Some(9),
            min_samples_split: 5,
            min_samples_leaf: 2,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    pub feature_subset_size: usize,
}

impl Classifier for RandomForestModel {
    /// Fraction of trees voting fake.
    fn predict_score(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        votes as f64 / self.trees.len() as f64
    }
}

pub fn fit_random_forest(x: &FeatureMatrix, params: &ForestParams) -> Result<RandomForestModel> {
    check_labels(x)?;
    check_finite(x)?;
    if params.n_estimators == 0 {
        return Err(Error::InvalidArgument("n_estimators must be >= 1".into()));
    }
    if x.n_rows < params.min_samples_split {
        return Err(Error::InvalidArgument(format!(
            "{} rows is fewer than min_samples_split = {}",
            x.n_rows, params.min_samples_split
        )));
    }
    let subset = params
        .max_features
        .unwrap_or_else(|| (x.n_cols as f64).sqrt().ceil() as usize)
        .clamp(1, x.n_cols.max(1));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(subset),
    };
    let m = x.n_rows;
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..m).map(|_| rng.gen_range(0..m)).collect()
            } else {
                (0..m).collect()
            };
            DecisionTree::fit(x, &rows, &tree_params, &mut rng)
        })
        .collect();
    Ok(RandomForestModel {
        trees,
        params: params.clone(),
        feature_subset_size: subset,
    })
}
