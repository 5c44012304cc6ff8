//! The five classifiers. Every model exposes a score in `[0, 1]` and labels
//! a sample fake (1) when the score exceeds 0.5.

mod dense;
pub mod forest;
pub mod logreg;
pub mod lstm;
pub mod mlp;
pub mod optim;
pub mod svm;
pub mod tree;

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::vectorize::FeatureMatrix;

pub use dense::DenseStack;
pub use forest::{fit_random_forest, ForestParams, RandomForestModel};
pub use logreg::{fit_logreg, LogRegModel, LogRegParams};
pub use lstm::{fit_lstm, fit_lstm_sequences, lstm_cell, LstmConfig, LstmModel};
pub use mlp::{fit_mlp, mlp_backward, mlp_forward, MlpConfig, MlpModel};
pub use optim::{AdamState, Optimizer, OptimizerKind};
pub use svm::{fit_linear_svm, LinearSvmModel, SvmParams};
pub use tree::{DecisionTree, TreeParams};

pub const DECISION_THRESHOLD: f64 = 0.5;

pub trait Classifier {
    fn predict_score(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> Label {
        Label::from(self.predict_score(x) > DECISION_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFamily {
    Svm,
    Mlp,
    Lstm,
    #[default]
    LogReg,
    RandomForest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Svm,
        ModelFamily::Mlp,
        ModelFamily::Lstm,
        ModelFamily::LogReg,
        ModelFamily::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Svm => "svm",
            ModelFamily::Mlp => "ann",
            ModelFamily::Lstm => "lstm",
            ModelFamily::LogReg => "logistic",
            ModelFamily::RandomForest => "random_forest",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(ModelFamily::Svm),
            "ann" | "mlp" => Ok(ModelFamily::Mlp),
            "lstm" => Ok(ModelFamily::Lstm),
            "logistic" | "logreg" => Ok(ModelFamily::LogReg),
            "random_forest" | "rf" | "forest" => Ok(ModelFamily::RandomForest),
            other => Err(Error::Config(format!("unknown model family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative given the pre-activation `z` and its output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` computed without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Binary cross-entropy of a probability, clamped away from 0 and 1.
pub fn bce(score: f64, label: f64) -> f64 {
    let p = score.clamp(1e-15, 1.0 - 1e-15);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// Per-epoch training loss and accuracy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
}

impl TrainingCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\tloss\taccuracy\n");
        for (i, (l, a)) in self.loss.iter().zip(&self.accuracy).enumerate() {
            out.push_str(&format!("{}\t{l:.10}\t{a:.6}\n", i + 1));
        }
        out
    }
}

pub(crate) fn check_finite(x: &FeatureMatrix) -> Result<()> {
    if let Some(pos) = x.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "feature matrix row {} column {}",
            pos / x.n_cols.max(1),
            pos % x.n_cols.max(1)
        )));
    }
    Ok(())
}

pub(crate) fn check_labels(x: &FeatureMatrix) -> Result<()> {
    if x.labels.len() != x.n_rows {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows,
            got: x.labels.len(),
        });
    }
    if x.n_rows == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    Ok(())
}

pub(crate) struct LoopConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// Mini-batch training with per-epoch reshuffling. `sample_step` runs the
/// forward and backward pass for one sample, adds its gradient into the
/// buffer and returns the pre-update score.
pub(crate) fn train_minibatch<F>(
    labels: &[Label],
    params: &mut [f64],
    optimizer: &mut Optimizer,
    cfg: &LoopConfig,
    mut sample_step: F,
) -> Result<TrainingCurve>
where
    F: FnMut(usize, &[f64], &mut [f64], &mut ChaCha8Rng) -> f64,
{
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; params.len()];
    let mut curve = TrainingCurve::default();
    let batch = cfg.batch_size.max(1);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(batch) {
            grad.fill(0.0);
            for &i in chunk {
                let score = sample_step(i, params, &mut grad, &mut rng);
                let y = f64::from(labels[i]);
                loss += bce(score, y);
                correct += usize::from(Label::from(score > DECISION_THRESHOLD) == labels[i]);
            }
            let scale = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            optimizer.update(params, &grad);
        }
        let mean_loss = loss / n as f64;
        if !mean_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                what: "training loss or parameters became non-finite".into(),
            });
        }
        curve.loss.push(mean_loss);
        curve.accuracy.push(correct as f64 / n as f64);
    }
    Ok(curve)
}

/// A fitted classifier of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    LogReg(LogRegModel),
    Svm(LinearSvmModel),
    RandomForest(RandomForestModel),
    Mlp(MlpModel),
    Lstm(LstmModel),
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::LogReg(_) => ModelFamily::LogReg,
            TrainedModel::Svm(_) => ModelFamily::Svm,
            TrainedModel::RandomForest(_) => ModelFamily::RandomForest,
            TrainedModel::Mlp(_) => ModelFamily::Mlp,
            TrainedModel::Lstm(_) => ModelFamily::Lstm,
        }
    }

    pub fn curve(&self) -> Option<&TrainingCurve> {
        match self {
            TrainedModel::Mlp(m) => Some(&m.curve),
            TrainedModel::Lstm(m) => Some(&m.curve),
            _ => None,
        }
    }

    /// Scores a word-embedding sequence. Only the LSTM consumes sequences;
    /// other families see the mean of the steps.
    pub fn predict_score_sequence(&self, steps: &[Vec<f64>], dim: usize) -> f64 {
        match self {
            TrainedModel::Lstm(m) => m.score_sequence(steps),
            other => {
                let mut mean = vec![0.0; dim];
                for s in steps {
                    mean.iter_mut().zip(s).for_each(|(a, b)| *a += b);
                }
                if !steps.is_empty() {
                    mean.iter_mut().for_each(|a| *a /= steps.len() as f64);
                }
                other.predict_score(&mean)
            }
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_score(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::LogReg(m) => m.predict_score(x),
            TrainedModel::Svm(m) => m.predict_score(x),
            TrainedModel::RandomForest(m) => m.predict_score(x),
            TrainedModel::Mlp(m) => m.predict_score(x),
            TrainedModel::Lstm(m) => m.predict_score(x),
        }
    }
}
