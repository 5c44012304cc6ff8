//! Linear soft-margin SVM: `1/2 ||w||^2 + C * sum(hinge(1 - y (w.x + b)))`
//! minimized by full-batch subgradient descent with a `1/t` step
//! (Pegasos schedule on the equivalent objective scaled by `1/(C m)`).
//! The iterate with the lowest objective is returned.

use serde::{Deserialize, Serialize};

use super::logreg::sparse_dot;
use super::{check_finite, check_labels, sigmoid, Classifier};
use crate::error::{Error, Result};
use crate::vectorize::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Objective at the zero initialization and at the returned iterate.
    pub initial_objective: f64,
    pub final_objective: f64,
}

impl LinearSvmModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        sparse_dot(&self.weights, x) + self.bias
    }
}

impl Classifier for LinearSvmModel {
    /// Sigmoid of the margin; used for ranking (ROC) only.
    fn predict_score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

pub fn svm_objective(x: &FeatureMatrix, w: &[f64], b: f64, c: f64) -> f64 {
    let hinge: f64 = x
        .rows()
        .zip(&x.labels)
        .map(|(row, &y)| (1.0 - signed(y) * (sparse_dot(w, row) + b)).max(0.0))
        .sum();
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * hinge
}

pub fn fit_linear_svm(x: &FeatureMatrix, params: &SvmParams) -> Result<LinearSvmModel> {
    check_labels(x)?;
    check_finite(x)?;
    if params.c <= 0.0 || !params.c.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be > 0, got {}", params.c)));
    }
    let n = x.n_cols;
    let m = x.n_rows as f64;
    let lambda = 1.0 / (params.c * m);
    let radius = 1.0 / lambda.sqrt();

    let mut w = vec![0.0; n];
    let mut b = 0.0;
    let initial = svm_objective(x, &w, b, params.c);
    let mut best = (initial, w.clone(), b);

    for t in 1..=params.epochs {
        let eta = 1.0 / (lambda * t as f64);
        let mut sum_w = vec![0.0; n];
        let mut sum_b = 0.0;
        for (row, &label) in x.rows().zip(&x.labels) {
            let y = signed(label);
            if y * (sparse_dot(&w, row) + b) < 1.0 {
                sum_b += y;
                for (s, &xi) in sum_w.iter_mut().zip(row) {
                    if xi != 0.0 {
                        *s += y * xi;
                    }
                }
            }
        }
        let shrink = 1.0 - eta * lambda;
        for (wi, s) in w.iter_mut().zip(&sum_w) {
            *wi = shrink * *wi + eta * s / m;
        }
        b += eta * sum_b / m;
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        let obj = svm_objective(x, &w, b, params.c);
        if !obj.is_finite() {
            return Err(Error::Diverged {
                epoch: t,
                what: "SVM objective".into(),
            });
        }
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }

    let (final_objective, weights, bias) = best;
    Ok(LinearSvmModel {
        weights,
        bias,
        c: params.c,
        initial_objective: initial,
        final_objective,
    })
}
