//! Minimal dense numerical kernel: matrices, a node-wise LSTM, multilayer
//! perceptrons with exact reverse-mode gradients, and update rules.

mod lstm;
mod matrix;
mod mlp;
mod optim;

pub use lstm::{lstm_backward, lstm_forward, LstmGradients, LstmParams, LstmTape};
pub use matrix::Matrix;
pub use mlp::{mlp_backward, mlp_forward, Activation, Layer, MlpParams, MlpTape};
pub use optim::{sgd_step, soft_update, static_batchnorm, Parameters};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn uniform_init(rng: &mut impl rand::Rng, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-bound..=bound)).collect()
}
