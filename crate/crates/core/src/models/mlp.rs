//! Feed-forward network: `hidden_layers` equal-width layers sharing one
//! activation, then a single sigmoid unit trained on binary cross-entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::DenseStack;
use super::optim::{Optimizer, OptimizerKind, DEFAULT_LR};
use super::{bce, check_finite, check_labels, train_minibatch, Activation, Classifier, LoopConfig, TrainingCurve};
use crate::error::{Error, Result};
use crate::vectorize::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub neurons: usize,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: 2,
            neurons: 64,
            activation: Activation::Relu,
            optimizer: OptimizerKind::Adam,
            lr: DEFAULT_LR,
            epochs: 20,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub input_dim: usize,
    pub stack: DenseStack,
    pub params: Vec<f64>,
    pub curve: TrainingCurve,
}

impl MlpModel {
    /// Randomly initialized network for `input_dim` features.
    pub fn new(input_dim: usize, config: &MlpConfig) -> Result<Self> {
        if config.hidden_layers == 0 || config.neurons == 0 {
            return Err(Error::InvalidArgument(
                "MLP needs at least one hidden layer and one neuron".into(),
            ));
        }
        if input_dim == 0 {
            return Err(Error::InvalidArgument("MLP input dimension is 0".into()));
        }
        let mut sizes = vec![input_dim];
        sizes.extend(std::iter::repeat_n(config.neurons, config.hidden_layers));
        sizes.push(1);
        let stack = DenseStack::new(sizes, config.activation, 0);
        let mut params = vec![0.0; stack.n_params()];
        stack.init(&mut params, &mut ChaCha8Rng::seed_from_u64(config.seed));
        Ok(MlpModel {
            config: config.clone(),
            input_dim,
            stack,
            params,
            curve: TrainingCurve::default(),
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl Classifier for MlpModel {
    fn predict_score(&self, x: &[f64]) -> f64 {
        self.stack.forward(&self.params, x).score()
    }
}

pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.check_dim(x)?;
    Ok(model.predict_score(x))
}

/// Gradient of the cross-entropy loss of one sample with respect to
/// `model.params`.
pub fn mlp_backward(model: &MlpModel, x: &[f64], label: u8) -> Result<Vec<f64>> {
    model.check_dim(x)?;
    let cache = model.stack.forward(&model.params, x);
    let mut grad = vec![0.0; model.params.len()];
    model
        .stack
        .backward(&model.params, x, &cache, f64::from(label), &mut grad, false);
    Ok(grad)
}

/// Cross-entropy loss of one sample at the given parameters.
pub fn mlp_loss(model: &MlpModel, params: &[f64], x: &[f64], label: u8) -> f64 {
    bce(model.stack.forward(params, x).score(), f64::from(label))
}

pub fn fit_mlp(x: &FeatureMatrix, config: &MlpConfig) -> Result<MlpModel> {
    check_labels(x)?;
    check_finite(x)?;
    let mut model = MlpModel::new(x.n_cols, config)?;
    let mut optimizer = Optimizer::new(config.optimizer, model.params.len(), config.lr);
    let loop_cfg = LoopConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        seed: config.seed.wrapping_add(1),
    };
    let stack = model.stack.clone();
    model.curve = train_minibatch(&x.labels, &mut model.params, &mut optimizer, &loop_cfg, |i, params, grad, _| {
        let row = x.row(i);
        let cache = stack.forward(params, row);
        stack.backward(params, row, &cache, f64::from(x.labels[i]), grad, false);
        cache.score()
    })?;
    Ok(model)
}
