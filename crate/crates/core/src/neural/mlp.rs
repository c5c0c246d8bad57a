use rand::Rng;
use serde::{Deserialize, Serialize};

use super::optim::Parameters;
use super::{sigmoid, uniform_init, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    None,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::None => x,
        }
    }

    /// Derivative expressed through the activated output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::None => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `fan_in × fan_out`
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }
}

/// Stack of affine layers, each followed by its activation.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
    generation: u64,
}

impl MlpParams {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::Dimension(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].fan_out(),
                    pair[1].fan_in()
                )));
            }
        }
        if let Some(layer) = layers.iter().find(|l| l.bias.len() != l.fan_out()) {
            return Err(Error::Dimension(format!(
                "bias of length {} for {} outputs",
                layer.bias.len(),
                layer.fan_out()
            )));
        }
        Ok(Self {
            layers,
            generation: 0,
        })
    }

    /// `sizes` lists every width from input to output; `activations` has one
    /// entry per layer. Weights and biases are uniform in `[−1/√fan_in, 1/√fan_in]`.
    pub fn random(sizes: &[usize], activations: &[Activation], rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() != activations.len() + 1 {
            return Err(Error::Dimension(format!(
                "{} widths for {} activations",
                sizes.len(),
                activations.len()
            )));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: Matrix::from_vec(w[0], w[1], uniform_init(rng, w[0] * w[1], bound))
                        .expect("sized by construction"),
                    bias: uniform_init(rng, w[1], bound),
                    activation,
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn zeros_like(&self) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                weights: Matrix::zeros(l.fan_in(), l.fan_out()),
                bias: vec![0.0; l.fan_out()],
                activation: l.activation,
            })
            .collect();
        Self {
            layers,
            generation: 0,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, MlpTape)> {
        mlp_forward(self, x)
    }

    pub fn backward(&self, tape: &MlpTape, upstream: &Matrix) -> Result<(MlpParams, Matrix)> {
        mlp_backward(self, tape, upstream)
    }
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

pub struct MlpTape {
    generation: u64,
    /// Input to each layer, then the final output.
    activations: Vec<Matrix>,
}

pub fn mlp_forward(params: &MlpParams, x: &Matrix) -> Result<(Matrix, MlpTape)> {
    if x.cols() != params.input_dim() {
        return Err(Error::Dimension(format!(
            "MLP input has {} columns, expected {}",
            x.cols(),
            params.input_dim()
        )));
    }
    let mut activations = Vec::with_capacity(params.layers.len() + 1);
    activations.push(x.clone());
    for layer in &params.layers {
        let mut z = activations
            .last()
            .expect("non-empty")
            .matmul(&layer.weights)?;
        z.add_row_vector(&layer.bias)?;
        let act = layer.activation;
        if act != Activation::None {
            for v in z.as_mut_slice() {
                *v = act.apply(*v);
            }
        }
        activations.push(z);
    }
    let y = activations.last().expect("non-empty").clone();
    Ok((
        y,
        MlpTape {
            generation: params.generation,
            activations,
        },
    ))
}

/// Returns parameter gradients and the gradient with respect to the input.
pub fn mlp_backward(
    params: &MlpParams,
    tape: &MlpTape,
    upstream: &Matrix,
) -> Result<(MlpParams, Matrix)> {
    if tape.generation != params.generation {
        return Err(Error::StaleTape {
            recorded: tape.generation,
            current: params.generation,
        });
    }
    let output = tape.activations.last().expect("non-empty");
    if upstream.shape() != output.shape() {
        return Err(Error::Dimension(format!(
            "MLP upstream {:?}, output {:?}",
            upstream.shape(),
            output.shape()
        )));
    }
    let mut grads = params.zeros_like();
    let mut delta = upstream.clone();
    for (idx, layer) in params.layers.iter().enumerate().rev() {
        let out = &tape.activations[idx + 1];
        if layer.activation != Activation::None {
            for (d, &y) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *d *= layer.activation.derivative_from_output(y);
            }
        }
        let input = &tape.activations[idx];
        grads.layers[idx].weights = input.t_matmul(&delta)?;
        grads.layers[idx].bias = delta.column_sums();
        delta = delta.matmul_t(&layer.weights)?;
    }
    Ok((grads, delta))
}
