//! Analytic gradients against central finite differences.

use fakenews_core::models::lstm::SEQUENCE_TIMESTEPS;
use fakenews_core::models::mlp::mlp_loss;
use fakenews_core::models::{mlp_backward, Activation, LstmConfig, LstmModel, MlpConfig, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const MAX_REL: f64 = 1e-4;
/// Denominator floor. Central differences at this step carry about 1e-11 of
/// rounding noise, so smaller components are compared absolutely at 1e-10.
const REL_FLOOR: f64 = 1e-6;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn finite_difference(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + H;
            let up = f(&p);
            p[k] = orig - H;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
}

#[test]
fn mlp_5x4x1_each_activation() {
    for act in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        for seed in 0..5 {
            let cfg = MlpConfig { hidden_layers: 1, neurons: 4, activation: act, seed, ..Default::default() };
            let mut model = MlpModel::new(5, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            model.params.iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y = (seed % 2) as u8;
            let analytic = mlp_backward(&model, &x, y).unwrap();
            let numeric = finite_difference(&model.params, |p| mlp_loss(&model, p, &x, y));
            let err = max_rel(&analytic, &numeric);
            assert!(err < MAX_REL, "{act:?} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn lstm_three_steps_four_cells() {
    for hidden_layers in [0, 1] {
        for seed in 0..5 {
            let cfg = LstmConfig {
                memcells: 4,
                hidden_layers,
                neurons: 3,
                activation: Activation::Tanh,
                timesteps: SEQUENCE_TIMESTEPS,
                seed,
                ..Default::default()
            };
            let mut model = LstmModel::new(3, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            model.params.iter_mut().for_each(|p| *p = rng.gen_range(-0.8..0.8));
            let seq: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let y = (seed % 2) as u8;
            let mut analytic = vec![0.0; model.params.len()];
            model.accumulate_gradient(&model.params, &seq, y, None, &mut analytic);
            let numeric = finite_difference(&model.params, |p| model.loss(p, &seq, y));
            let err = max_rel(&analytic, &numeric);
            assert!(err < MAX_REL, "head layers {hidden_layers} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn lstm_dropout_mask_gradient() {
    // with a fixed mask the masked network is an ordinary function of params
    let cfg = LstmConfig { memcells: 4, hidden_layers: 1, neurons: 2, timesteps: SEQUENCE_TIMESTEPS, ..Default::default() };
    let mut model = LstmModel::new(2, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    model.params.iter_mut().for_each(|p| *p = rng.gen_range(-0.8..0.8));
    let seq = vec![vec![0.3, -0.7], vec![1.0, 0.2], vec![-0.4, 0.5]];
    let mask = [1.25, 0.0, 1.25, 1.25];
    let mut analytic = vec![0.0; model.params.len()];
    model.accumulate_gradient(&model.params, &seq, 1, Some(&mask), &mut analytic);
    let numeric = finite_difference(&model.params, |p| {
        let mut g = vec![0.0; p.len()];
        let score = model.accumulate_gradient(p, &seq, 1, Some(&mask), &mut g);
        -score.ln()
    });
    for (k, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        assert!(rel_err(*a, *n) < MAX_REL, "param {k}: {a:e} vs {n:e}");
    }
}
