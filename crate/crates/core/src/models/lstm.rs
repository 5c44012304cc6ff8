//! Single-layer LSTM over a sequence of feature vectors, followed by a dense
//! head ending in one sigmoid unit. The final hidden state feeds the head.
//!
//! Parameter layout: `W` (`n x 4h`, input-major), `U` (`h x 4h`), `b` (`4h`),
//! then the head. Gate blocks within each `4h` row are ordered f, i, o, g.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::DenseStack;
use super::optim::{Optimizer, OptimizerKind, DEFAULT_LR};
use super::{bce, check_finite, check_labels, sigmoid, train_minibatch, Activation, Classifier, LoopConfig, TrainingCurve};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::vectorize::FeatureMatrix;

pub const DEFAULT_DROPOUT: f64 = 0.2;
pub const SEQUENCE_TIMESTEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub memcells: usize,
    /// Hidden layers of the dense head; 0 connects the LSTM straight to the
    /// output unit.
    pub hidden_layers: usize,
    pub neurons: usize,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    /// 1 for one feature vector per document, 200 for word sequences.
    pub timesteps: usize,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            memcells: 32,
            hidden_layers: 1,
            neurons: 32,
            activation: Activation::Sigmoid,
            optimizer: OptimizerKind::Adam,
            lr: DEFAULT_LR,
            epochs: 10,
            batch_size: 64,
            dropout: DEFAULT_DROPOUT,
            timesteps: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub input_dim: usize,
    pub head: DenseStack,
    pub params: Vec<f64>,
    pub curve: TrainingCurve,
}

fn recurrent_params(n: usize, h: usize) -> usize {
    4 * h * (n + h + 1)
}

/// Activations of one step, kept for backpropagation.
struct Step {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Gate outputs f, i, o, g, each of length h.
    gates: Vec<f64>,
    c: Vec<f64>,
}

fn cell_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], params: &[f64], n: usize) -> Step {
    let h = h_prev.len();
    let g4 = 4 * h;
    let (w, rest) = params.split_at(n * g4);
    let (u, rest) = rest.split_at(h * g4);
    let b = &rest[..g4];
    let mut z = b.to_vec();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (zk, wk) in z.iter_mut().zip(&w[j * g4..(j + 1) * g4]) {
                *zk += xj * wk;
            }
        }
    }
    for (j, &hj) in h_prev.iter().enumerate() {
        if hj != 0.0 {
            for (zk, uk) in z.iter_mut().zip(&u[j * g4..(j + 1) * g4]) {
                *zk += hj * uk;
            }
        }
    }
    for (k, v) in z.iter_mut().enumerate() {
        *v = if k < 3 * h { sigmoid(*v) } else { v.tanh() };
    }
    let c: Vec<f64> = (0..h).map(|k| z[k] * c_prev[k] + z[h + k] * z[3 * h + k]).collect();
    Step {
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates: z,
        c,
    }
}

impl Step {
    fn h(&self) -> Vec<f64> {
        let h = self.c.len();
        (0..h).map(|k| self.gates[2 * h + k] * self.c[k].tanh()).collect()
    }
}

/// One LSTM step. `params` holds `W`, `U` and `b` in the module layout for
/// `x.len()` inputs and `h_prev.len()` cells.
pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], params: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let step = cell_step(x, h_prev, c_prev, params, x.len());
    (step.h(), step.c)
}

impl LstmModel {
    pub fn new(input_dim: usize, config: &LstmConfig) -> Result<Self> {
        if config.memcells == 0 || input_dim == 0 {
            return Err(Error::InvalidArgument("LSTM needs memcells > 0 and input_dim > 0".into()));
        }
        if config.hidden_layers > 0 && config.neurons == 0 {
            return Err(Error::InvalidArgument("LSTM head hidden layers need neurons > 0".into()));
        }
        if config.timesteps != 1 && config.timesteps != SEQUENCE_TIMESTEPS {
            return Err(Error::InvalidArgument(format!(
                "timesteps must be 1 or {SEQUENCE_TIMESTEPS}, got {}",
                config.timesteps
            )));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::InvalidArgument(format!("dropout must be in [0, 1), got {}", config.dropout)));
        }
        let h = config.memcells;
        let n_rec = recurrent_params(input_dim, h);
        let mut sizes = vec![h];
        sizes.extend(std::iter::repeat_n(config.neurons, config.hidden_layers));
        sizes.push(1);
        let head = DenseStack::new(sizes, config.activation, n_rec);
        let mut params = vec![0.0; n_rec + head.n_params()];

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let rw = (6.0 / (input_dim + 4 * h) as f64).sqrt();
        let ru = (6.0 / (5 * h) as f64).sqrt();
        for p in &mut params[..input_dim * 4 * h] {
            *p = rng.gen_range(-rw..rw);
        }
        for p in &mut params[input_dim * 4 * h..(input_dim + h) * 4 * h] {
            *p = rng.gen_range(-ru..ru);
        }
        head.init(&mut params, &mut rng);
        Ok(LstmModel {
            config: config.clone(),
            input_dim,
            head,
            params,
            curve: TrainingCurve::default(),
        })
    }

    fn run(&self, params: &[f64], steps: &[Vec<f64>]) -> Vec<Step> {
        let h = self.config.memcells;
        let mut out: Vec<Step> = Vec::with_capacity(steps.len());
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in steps.iter().take(self.config.timesteps) {
            let s = cell_step(x, &h_prev, &c_prev, params, self.input_dim);
            h_prev = s.h();
            c_prev.clone_from(&s.c);
            out.push(s);
        }
        out
    }

    fn final_h(&self, trace: &[Step]) -> Vec<f64> {
        trace.last().map_or_else(|| vec![0.0; self.config.memcells], Step::h)
    }

    /// Score of a sequence of feature vectors. Steps past `timesteps` are
    /// ignored; shorter sequences run for their own length only.
    pub fn score_sequence(&self, steps: &[Vec<f64>]) -> f64 {
        self.score_with(&self.params, steps)
    }

    fn score_with(&self, params: &[f64], steps: &[Vec<f64>]) -> f64 {
        let trace = self.run(params, steps);
        self.head.forward(params, &self.final_h(&trace)).score()
    }

    /// Cross-entropy of one sequence at `params`, without dropout.
    pub fn loss(&self, params: &[f64], steps: &[Vec<f64>], label: Label) -> f64 {
        bce(self.score_with(params, steps), f64::from(label))
    }

    /// Adds the loss gradient of one sequence into `grad`. `mask` scales
    /// each component of the final hidden state (dropout); `None` means no
    /// dropout. Returns the score.
    pub fn accumulate_gradient(
        &self,
        params: &[f64],
        steps: &[Vec<f64>],
        label: Label,
        mask: Option<&[f64]>,
        grad: &mut [f64],
    ) -> f64 {
        let n = self.input_dim;
        let h = self.config.memcells;
        let g4 = 4 * h;
        let trace = self.run(params, steps);
        let mut h_last = self.final_h(&trace);
        if let Some(m) = mask {
            h_last.iter_mut().zip(m).for_each(|(a, s)| *a *= s);
        }
        let cache = self.head.forward(params, &h_last);
        let mut dh = self
            .head
            .backward(params, &h_last, &cache, f64::from(label), grad, true)
            .unwrap();
        if let Some(m) = mask {
            dh.iter_mut().zip(m).for_each(|(a, s)| *a *= s);
        }

        let u = &params[n * g4..(n + h) * g4];
        let mut dc = vec![0.0; h];
        let mut dz = vec![0.0; g4];
        for (t, s) in trace.iter().enumerate().rev() {
            let x = &steps[t];
            for k in 0..h {
                let (f, i, o, g) = (s.gates[k], s.gates[h + k], s.gates[2 * h + k], s.gates[3 * h + k]);
                let tc = s.c[k].tanh();
                let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
                dz[k] = dct * s.c_prev[k] * f * (1.0 - f);
                dz[h + k] = dct * g * i * (1.0 - i);
                dz[2 * h + k] = dh[k] * tc * o * (1.0 - o);
                dz[3 * h + k] = dct * i * (1.0 - g * g);
                dc[k] = dct * f;
            }
            let (gw, rest) = grad.split_at_mut(n * g4);
            let (gu, rest) = rest.split_at_mut(h * g4);
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    for (g, d) in gw[j * g4..(j + 1) * g4].iter_mut().zip(&dz) {
                        *g += xj * d;
                    }
                }
            }
            for (j, &hj) in s.h_prev.iter().enumerate() {
                if hj != 0.0 {
                    for (g, d) in gu[j * g4..(j + 1) * g4].iter_mut().zip(&dz) {
                        *g += hj * d;
                    }
                }
            }
            for (g, d) in rest[..g4].iter_mut().zip(&dz) {
                *g += d;
            }
            for (j, dhj) in dh.iter_mut().enumerate() {
                *dhj = u[j * g4..(j + 1) * g4].iter().zip(&dz).map(|(a, b)| a * b).sum();
            }
        }
        cache.score()
    }
}

impl Classifier for LstmModel {
    /// Treats `x` as a one-step sequence.
    fn predict_score(&self, x: &[f64]) -> f64 {
        self.score_sequence(std::slice::from_ref(&x.to_vec()))
    }
}

/// Trains on dense rows, each a one-step sequence.
pub fn fit_lstm(x: &FeatureMatrix, config: &LstmConfig) -> Result<LstmModel> {
    check_labels(x)?;
    check_finite(x)?;
    let seqs: Vec<Vec<Vec<f64>>> = x.rows().map(|r| vec![r.to_vec()]).collect();
    fit_lstm_sequences(&seqs, &x.labels, x.n_cols, config)
}

/// Trains on variable-length sequences of `dim`-dimensional steps. Steps
/// beyond `config.timesteps` are dropped.
pub fn fit_lstm_sequences(
    seqs: &[Vec<Vec<f64>>],
    labels: &[Label],
    dim: usize,
    config: &LstmConfig,
) -> Result<LstmModel> {
    if seqs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: seqs.len(),
            got: labels.len(),
        });
    }
    if seqs.is_empty() {
        return Err(Error::Empty("no training sequences".into()));
    }
    for (i, s) in seqs.iter().enumerate() {
        if let Some(step) = s.iter().find(|step| step.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "sequence {i} has a step of dimension {} (expected {dim})",
                step.len()
            )));
        }
        if s.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sequence {i}")));
        }
    }
    let mut model = LstmModel::new(dim, config)?;
    let mut optimizer = Optimizer::new(config.optimizer, model.params.len(), config.lr);
    let loop_cfg = LoopConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        seed: config.seed.wrapping_add(1),
    };
    let keep = 1.0 - config.dropout;
    let mut mask = vec![0.0; config.memcells];
    let mut params = std::mem::take(&mut model.params);
    let curve = train_minibatch(labels, &mut params, &mut optimizer, &loop_cfg, |i, p, grad, rng| {
        let mask_ref = if config.dropout > 0.0 {
            for m in mask.iter_mut() {
                *m = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
            }
            Some(mask.as_slice())
        } else {
            None
        };
        model.accumulate_gradient(p, &seqs[i], labels[i], mask_ref, grad)
    })?;
    model.params = params;
    model.curve = curve;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::EncoderTag;

    #[test]
    fn zero_cell_stays_zero() {
        let (n, h) = (3, 4);
        let params = vec![0.0; recurrent_params(n, h)];
        let (ht, ct) = lstm_cell(&[0.0; 3], &[0.0; 4], &[0.0; 4], &params);
        assert_eq!(ht, vec![0.0; 4]);
        assert_eq!(ct, vec![0.0; 4]);
    }

    #[test]
    fn cell_matches_scalar_formula() {
        // one input, one cell: every weight 0.5, bias 0
        let params = vec![0.5; recurrent_params(1, 1)];
        let params: Vec<f64> = params.iter().enumerate().map(|(k, &v)| if k >= 8 { 0.0 } else { v }).collect();
        let (x, hp, cp) = (1.0, 0.2, 0.3);
        let z = 0.5 * x + 0.5 * hp;
        let (f, i, o, g) = (sigmoid(z), sigmoid(z), sigmoid(z), z.tanh());
        let c = f * cp + i * g;
        let (ht, ct) = lstm_cell(&[x], &[hp], &[cp], &params);
        assert!((ct[0] - c).abs() < 1e-15);
        assert!((ht[0] - o * c.tanh()).abs() < 1e-15);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let seqs = vec![vec![vec![1.0, 2.0]], vec![vec![1.0]]];
        let r = fit_lstm_sequences(&seqs, &[0, 1], 2, &LstmConfig::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bad_timesteps_rejected() {
        let cfg = LstmConfig { timesteps: 7, ..Default::default() };
        assert!(LstmModel::new(2, &cfg).is_err());
    }

    #[test]
    fn long_sequences_truncated() {
        let cfg = LstmConfig { memcells: 3, ..Default::default() };
        let m = LstmModel::new(2, &cfg).unwrap();
        let a = vec![vec![0.5, -0.5]];
        let mut b = a.clone();
        b.push(vec![9.0, 9.0]);
        assert_eq!(m.score_sequence(&a), m.score_sequence(&b));
    }

    #[test]
    fn learns_sign_rule() {
        let rows: Vec<Vec<f64>> = (0..80).map(|i| vec![(i as f64 / 40.0) - 1.0 + 0.0125]).collect();
        let labels = rows.iter().map(|r| u8::from(r[0] > 0.0)).collect();
        let x = FeatureMatrix::from_rows(rows, labels, EncoderTag::Count).unwrap();
        let cfg = LstmConfig { memcells: 4, neurons: 4, epochs: 80, lr: 0.02, batch_size: 8, ..Default::default() };
        let m = fit_lstm(&x, &cfg).unwrap();
        assert!(m.curve.loss.iter().all(|l| l.is_finite()));
        let acc = x.rows().zip(&x.labels).filter(|(r, &y)| m.predict(r) == y).count();
        assert!(acc >= 76, "{acc}");
    }
}
