//! Fully connected layers ending in a single sigmoid unit, laid out in a
//! flat parameter slice. Shared by the MLP and the LSTM head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Activation};

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs. Its weights
/// are stored input-major (`W[j * out + k]`) followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseStack {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    /// Position of the first parameter within the owning model's vector.
    pub offset: usize,
}

pub struct DenseCache {
    /// Pre-activations per layer.
    pub zs: Vec<Vec<f64>>,
    /// Post-activations per layer; the last holds the sigmoid score.
    pub acts: Vec<Vec<f64>>,
}

impl DenseCache {
    pub fn score(&self) -> f64 {
        self.acts.last().unwrap()[0]
    }
}

impl DenseStack {
    pub fn new(sizes: Vec<usize>, activation: Activation, offset: usize) -> Self {
        debug_assert_eq!(*sizes.last().unwrap(), 1);
        DenseStack { sizes, activation, offset }
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn layer_offset(&self, l: usize) -> usize {
        self.offset + self.sizes[..l + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(&self, params: &mut [f64], rng: &mut impl Rng) {
        for l in 0..self.n_layers() {
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            let start = self.layer_offset(l);
            let r = (6.0 / (inp + out) as f64).sqrt();
            for w in &mut params[start..start + inp * out] {
                *w = rng.gen_range(-r..r);
            }
            params[start + inp * out..start + inp * out + out].fill(0.0);
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> DenseCache {
        let mut zs = Vec::with_capacity(self.n_layers());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            let start = self.layer_offset(l);
            let w = &params[start..start + inp * out];
            let mut z = params[start + inp * out..start + inp * out + out].to_vec();
            for (j, &a) in input.iter().enumerate() {
                if a != 0.0 {
                    for (zk, wk) in z.iter_mut().zip(&w[j * out..(j + 1) * out]) {
                        *zk += a * wk;
                    }
                }
            }
            let last = l + 1 == self.n_layers();
            let a: Vec<f64> = if last {
                z.iter().map(|&v| sigmoid(v)).collect()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        DenseCache { zs, acts }
    }

    /// Accumulates binary cross-entropy gradients for one sample into `grad`
    /// (same layout as `params`). Returns the gradient with respect to the
    /// input when `want_input_grad` is set.
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        cache: &DenseCache,
        label: f64,
        grad: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        // d(BCE)/dz at the sigmoid output
        let mut delta = vec![cache.score() - label];
        for l in (0..self.n_layers()).rev() {
            let input: &[f64] = if l == 0 { x } else { &cache.acts[l - 1] };
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            let start = self.layer_offset(l);
            let w = &params[start..start + inp * out];
            {
                let (gw, gb) = grad[start..start + inp * out + out].split_at_mut(inp * out);
                for (j, &a) in input.iter().enumerate() {
                    if a != 0.0 {
                        for (g, d) in gw[j * out..(j + 1) * out].iter_mut().zip(&delta) {
                            *g += a * d;
                        }
                    }
                }
                for (g, d) in gb.iter_mut().zip(&delta) {
                    *g += d;
                }
            }
            if l == 0 && !want_input_grad {
                return None;
            }
            let mut d_input: Vec<f64> = (0..inp)
                .map(|j| w[j * out..(j + 1) * out].iter().zip(&delta).map(|(a, b)| a * b).sum())
                .collect();
            if l == 0 {
                return Some(d_input);
            }
            let z_prev = &cache.zs[l - 1];
            let a_prev = &cache.acts[l - 1];
            for j in 0..inp {
                d_input[j] *= self.activation.derivative(z_prev[j], a_prev[j]);
            }
            delta = d_input;
        }
        None
    }
}
