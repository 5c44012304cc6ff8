//! L2-regularized logistic regression fitted by full-batch Adam.
//!
//! Objective: mean binary cross-entropy + `||w||^2 / (2 C m)`. The bias is
//! not regularized.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::AdamState;
use super::{check_finite, check_labels, sigmoid, softplus, Classifier};
use crate::error::{Error, Result};
use crate::vectorize::FeatureMatrix;

/// Rows per partial gradient; partial sums are combined in a fixed order so
/// results do not depend on the thread count.
const CHUNK_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub c: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            c: 1.0,
            epochs: 300,
            lr: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Objective value at the start of each epoch.
    pub loss_history: Vec<f64>,
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        sparse_dot(&self.weights, x) + self.bias
    }
}

impl Classifier for LogRegModel {
    fn predict_score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

pub(crate) fn sparse_dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter()
        .zip(x)
        .filter(|(_, &xi)| xi != 0.0)
        .map(|(wi, xi)| wi * xi)
        .sum()
}

/// Objective value at `(w, b)`.
pub fn logreg_objective(x: &FeatureMatrix, w: &[f64], b: f64, c: f64) -> f64 {
    let m = x.n_rows as f64;
    let data: f64 = x
        .rows()
        .zip(&x.labels)
        .map(|(row, &y)| {
            let z = sparse_dot(w, row) + b;
            softplus(z) - f64::from(y) * z
        })
        .sum::<f64>()
        / m;
    data + w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c * m)
}

/// Objective and its gradient `(dw, db)` at `(w, b)`.
pub fn logreg_gradient(x: &FeatureMatrix, w: &[f64], b: f64, c: f64) -> (f64, Vec<f64>, f64) {
    let n = x.n_cols;
    let m = x.n_rows as f64;
    let partials: Vec<(f64, Vec<f64>, f64)> = (0..x.n_rows)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK_ROWS)
        .map(|rows| {
            let mut gw = vec![0.0; n];
            let mut gb = 0.0;
            let mut loss = 0.0;
            for &i in rows {
                let row = x.row(i);
                let y = f64::from(x.labels[i]);
                let z = sparse_dot(w, row) + b;
                loss += softplus(z) - y * z;
                let r = sigmoid(z) - y;
                gb += r;
                for (g, &xi) in gw.iter_mut().zip(row) {
                    if xi != 0.0 {
                        *g += r * xi;
                    }
                }
            }
            (loss, gw, gb)
        })
        .collect();
    let mut gw = vec![0.0; n];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (l, pw, pb) in partials {
        loss += l;
        gb += pb;
        gw.iter_mut().zip(&pw).for_each(|(a, b)| *a += b);
    }
    let reg = 1.0 / (c * m);
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / m + reg * wi;
    }
    let obj = loss / m + w.iter().map(|v| v * v).sum::<f64>() * reg / 2.0;
    (obj, gw, gb / m)
}

pub fn fit_logreg(x: &FeatureMatrix, params: &LogRegParams) -> Result<LogRegModel> {
    check_labels(x)?;
    check_finite(x)?;
    if params.c <= 0.0 || !params.c.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be > 0, got {}", params.c)));
    }
    let n = x.n_cols;
    let mut theta = vec![0.0; n + 1];
    let mut adam = AdamState::new(n + 1, params.lr);
    let mut history = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        let (obj, gw, gb) = logreg_gradient(x, &theta[..n], theta[n], params.c);
        if !obj.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                what: "logistic regression objective".into(),
            });
        }
        history.push(obj);
        let mut grad = gw;
        grad.push(gb);
        adam.update(&mut theta, &grad);
    }
    let bias = theta.pop().unwrap();
    Ok(LogRegModel {
        weights: theta,
        bias,
        c: params.c,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::EncoderTag;

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, labels, EncoderTag::Count).unwrap()
    }

    #[test]
    fn separable_1d() {
        let x = matrix(vec![vec![-1.0], vec![1.0]], vec![0, 1]);
        let m = fit_logreg(&x, &LogRegParams { c: 1e6, ..Default::default() }).unwrap();
        assert_eq!(m.predict(&[-1.0]), 0);
        assert_eq!(m.predict(&[1.0]), 1);
        assert!(m.loss_history.last().unwrap() <= &m.loss_history[0]);
    }

    #[test]
    fn strong_regularization_fits_base_rate() {
        let x = matrix(vec![vec![1.0, 0.5], vec![-2.0, 1.0], vec![0.3, -1.0]], vec![1, 1, 1]);
        let m = fit_logreg(&x, &LogRegParams { c: 1e-4, epochs: 500, ..Default::default() }).unwrap();
        let norm = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 0.1, "{norm}");
        assert!(m.predict_score(&[0.0, 0.0]) > 0.9);
    }

    #[test]
    fn gradient_at_origin_matches_finite_differences() {
        let x = matrix(
            vec![vec![0.5, -1.0, 2.0], vec![1.5, 0.0, -0.5], vec![-1.0, 2.0, 0.25], vec![0.0, 0.3, 1.0]],
            vec![1, 0, 0, 1],
        );
        let c = 2.0;
        let w0 = vec![0.0; 3];
        let (_, gw, gb) = logreg_gradient(&x, &w0, 0.0, c);
        for j in 0..3 {
            let expected: f64 = x
                .rows()
                .zip(&x.labels)
                .map(|(r, &y)| (0.5 - f64::from(y)) * r[j])
                .sum::<f64>()
                / 4.0;
            assert!((gw[j] - expected).abs() < 1e-15);
            let h = 1e-6;
            let mut wp = w0.clone();
            wp[j] += h;
            let mut wm = w0.clone();
            wm[j] -= h;
            let fd = (logreg_objective(&x, &wp, 0.0, c) - logreg_objective(&x, &wm, 0.0, c)) / (2.0 * h);
            assert!((fd - gw[j]).abs() < 1e-6, "{fd} vs {}", gw[j]);
        }
        let h = 1e-6;
        let fd = (logreg_objective(&x, &w0, h, c) - logreg_objective(&x, &w0, -h, c)) / (2.0 * h);
        assert!((fd - gb).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_finite() {
        let x = matrix(vec![vec![f64::NAN], vec![1.0]], vec![0, 1]);
        assert!(matches!(fit_logreg(&x, &LogRegParams::default()), Err(Error::NonFinite(_))));
    }
}
