use rand::Rng;

use super::optim::Parameters;
use super::{sigmoid, uniform_init, Matrix};
use crate::error::{Error, Result};

const GATES: usize = 4;

/// Node-wise LSTM with one weight set shared by every row of the input.
///
/// Input and hidden size are equal because the recurrence starts from
/// `h_0 = X_1`. Gate pre-activations are laid out as four column blocks
/// `[input | forget | cell | output]`, so `input_weights` is `dim × 4·dim`
/// and rows of `X_t` multiply from the left.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    dim: usize,
    input_weights: Matrix,
    input_bias: Vec<f64>,
    hidden_weights: Matrix,
    hidden_bias: Vec<f64>,
    generation: u64,
}

impl LstmParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            input_weights: Matrix::zeros(dim, GATES * dim),
            input_bias: vec![0.0; GATES * dim],
            hidden_weights: Matrix::zeros(dim, GATES * dim),
            hidden_bias: vec![0.0; GATES * dim],
            generation: 0,
        }
    }

    /// Uniform initialization in `[−1/√dim, 1/√dim]`.
    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let width = GATES * dim;
        let input_weights = Matrix::from_vec(dim, width, uniform_init(rng, dim * width, bound))
            .expect("sized by construction");
        let input_bias = uniform_init(rng, width, bound);
        let hidden_weights = Matrix::from_vec(dim, width, uniform_init(rng, dim * width, bound))
            .expect("sized by construction");
        let hidden_bias = uniform_init(rng, width, bound);
        Self {
            dim,
            input_weights,
            input_bias,
            hidden_weights,
            hidden_bias,
            generation: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn hidden_weights(&self) -> &Matrix {
        &self.hidden_weights
    }

    pub fn input_bias(&self) -> &[f64] {
        &self.input_bias
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Runs the recurrence over `inputs` (each `rows × dim`) and returns `h_T`.
    pub fn forward(&self, inputs: &[Matrix]) -> Result<(Matrix, LstmTape)> {
        lstm_forward(self, inputs)
    }

    pub fn backward(&self, tape: &LstmTape, upstream: &Matrix) -> Result<LstmGradients> {
        lstm_backward(self, tape, upstream)
    }

    /// Like [`backward`](Self::backward) but skips the input gradients,
    /// which training never needs because embeddings are data.
    pub fn backward_params(&self, tape: &LstmTape, upstream: &Matrix) -> Result<LstmParams> {
        reverse(self, tape, upstream, false).map(|g| g.params)
    }
}

impl Parameters for LstmParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.input_weights.as_slice(),
            &self.input_bias,
            self.hidden_weights.as_slice(),
            &self.hidden_bias,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        vec![
            self.input_weights.as_mut_slice(),
            &mut self.input_bias,
            self.hidden_weights.as_mut_slice(),
            &mut self.hidden_bias,
        ]
    }
}

struct StepCache {
    input: Matrix,
    h_prev: Matrix,
    c_prev: Matrix,
    /// Activated gates, `rows × 4·dim`.
    gates: Matrix,
    tanh_c: Matrix,
}

/// Forward intermediates for one LSTM pass.
pub struct LstmTape {
    generation: u64,
    rows: usize,
    steps: Vec<StepCache>,
}

impl LstmTape {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Gradients of one backward pass.
#[derive(Debug)]
pub struct LstmGradients {
    pub params: LstmParams,
    /// One `rows × dim` matrix per input step.
    pub inputs: Vec<Matrix>,
}

/// `tanh` through the logistic function; much cheaper than `f64::tanh`
/// and accurate to a few ulp in absolute terms.
#[inline]
fn fast_tanh(x: f64) -> f64 {
    2.0 * sigmoid(2.0 * x) - 1.0
}

pub fn lstm_forward(params: &LstmParams, inputs: &[Matrix]) -> Result<(Matrix, LstmTape)> {
    let dim = params.dim;
    let first = inputs
        .first()
        .ok_or_else(|| Error::Dimension("LSTM needs at least one input step".into()))?;
    let rows = first.rows();
    if let Some(bad) = inputs.iter().find(|x| x.shape() != (rows, dim)) {
        return Err(Error::Dimension(format!(
            "LSTM input step {:?}, expected ({rows}, {dim})",
            bad.shape()
        )));
    }

    let width = GATES * dim;
    let bias: Vec<f64> = params
        .input_bias
        .iter()
        .zip(&params.hidden_bias)
        .map(|(a, b)| a + b)
        .collect();
    let mut h = first.clone();
    let mut c = Matrix::zeros(rows, dim);
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        let mut gates = Matrix::zeros(rows, width);
        for row in gates.as_mut_slice().chunks_exact_mut(width) {
            row.copy_from_slice(&bias);
        }
        x.matmul_acc(&params.input_weights, &mut gates)?;
        h.matmul_acc(&params.hidden_weights, &mut gates)?;

        let mut c_next = Matrix::zeros(rows, dim);
        let mut tanh_c = Matrix::zeros(rows, dim);
        let mut h_next = Matrix::zeros(rows, dim);
        let cells = gates
            .as_mut_slice()
            .chunks_exact_mut(width)
            .zip(c.as_slice().chunks_exact(dim))
            .zip(c_next.as_mut_slice().chunks_exact_mut(dim))
            .zip(tanh_c.as_mut_slice().chunks_exact_mut(dim))
            .zip(h_next.as_mut_slice().chunks_exact_mut(dim));
        for ((((g_row, c_prev), cn), tc), hn) in cells {
            let (gi, rest) = g_row.split_at_mut(dim);
            let (gf, rest) = rest.split_at_mut(dim);
            let (gg, go) = rest.split_at_mut(dim);
            for j in 0..dim {
                gi[j] = sigmoid(gi[j]);
                gf[j] = sigmoid(gf[j]);
                gg[j] = fast_tanh(gg[j]);
                go[j] = sigmoid(go[j]);
                cn[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
                tc[j] = fast_tanh(cn[j]);
                hn[j] = go[j] * tc[j];
            }
        }
        steps.push(StepCache {
            input: x.clone(),
            h_prev: std::mem::replace(&mut h, h_next),
            c_prev: std::mem::replace(&mut c, c_next),
            gates,
            tanh_c,
        });
    }
    let tape = LstmTape {
        generation: params.generation,
        rows,
        steps,
    };
    Ok((h, tape))
}

/// Exact reverse pass for a scalar loss whose gradient at `h_T` is `upstream`.
pub fn lstm_backward(
    params: &LstmParams,
    tape: &LstmTape,
    upstream: &Matrix,
) -> Result<LstmGradients> {
    reverse(params, tape, upstream, true)
}

fn reverse(
    params: &LstmParams,
    tape: &LstmTape,
    upstream: &Matrix,
    with_inputs: bool,
) -> Result<LstmGradients> {
    if tape.generation != params.generation {
        return Err(Error::StaleTape {
            recorded: tape.generation,
            current: params.generation,
        });
    }
    let dim = params.dim;
    let rows = tape.rows;
    if upstream.shape() != (rows, dim) {
        return Err(Error::Dimension(format!(
            "LSTM upstream {:?}, expected ({rows}, {dim})",
            upstream.shape()
        )));
    }

    let mut grads = LstmParams::zeros(dim);
    let mut input_grads = if with_inputs {
        vec![Matrix::zeros(rows, dim); tape.steps.len()]
    } else {
        Vec::new()
    };
    let mut dh = upstream.clone();
    let mut dc = Matrix::zeros(rows, dim);

    for (t, step) in tape.steps.iter().enumerate().rev() {
        let mut dpre = Matrix::zeros(rows, GATES * dim);
        for r in 0..rows {
            let g_row = step.gates.row(r);
            let tc = step.tanh_c.row(r);
            let c_prev = step.c_prev.row(r);
            let dh_row = dh.row(r);
            let dc_row = dc.row_mut(r);
            let dp = dpre.row_mut(r);
            for j in 0..dim {
                let (i, f, g, o) = (
                    g_row[j],
                    g_row[dim + j],
                    g_row[2 * dim + j],
                    g_row[3 * dim + j],
                );
                let d_o = dh_row[j] * tc[j];
                let d_c = dc_row[j] + dh_row[j] * o * (1.0 - tc[j] * tc[j]);
                let d_i = d_c * g;
                let d_f = d_c * c_prev[j];
                let d_g = d_c * i;
                dc_row[j] = d_c * f;
                dp[j] = d_i * i * (1.0 - i);
                dp[dim + j] = d_f * f * (1.0 - f);
                dp[2 * dim + j] = d_g * (1.0 - g * g);
                dp[3 * dim + j] = d_o * o * (1.0 - o);
            }
        }

        grads
            .input_weights
            .add_assign(&step.input.t_matmul(&dpre)?)?;
        grads
            .hidden_weights
            .add_assign(&step.h_prev.t_matmul(&dpre)?)?;
        let bias_step = dpre.column_sums();
        for ((bi, bh), s) in grads
            .input_bias
            .iter_mut()
            .zip(grads.hidden_bias.iter_mut())
            .zip(bias_step)
        {
            *bi += s;
            *bh += s;
        }

        if with_inputs {
            input_grads[t].add_assign(&dpre.matmul_t(&params.input_weights)?)?;
        }
        if t > 0 || with_inputs {
            dh = dpre.matmul_t(&params.hidden_weights)?;
        }
    }
    if with_inputs {
        // h_0 is the first input step.
        input_grads[0].add_assign(&dh)?;
    }

    Ok(LstmGradients {
        params: grads,
        inputs: input_grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_inputs(rng: &mut ChaCha8Rng, steps: usize, rows: usize, dim: usize) -> Vec<Matrix> {
        (0..steps)
            .map(|_| Matrix::from_fn(rows, dim, |_, _| rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn zero_params_give_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = LstmParams::zeros(8);
        let x = random_inputs(&mut rng, 4, 3, 8);
        let (h, _) = params.forward(&x).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rows_are_processed_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = LstmParams::random(8, &mut rng);
        let single = random_inputs(&mut rng, 3, 1, 8);
        let tripled: Vec<Matrix> = single
            .iter()
            .map(|x| Matrix::vstack([x, x, x]).unwrap())
            .collect();
        let (h1, _) = params.forward(&single).unwrap();
        let (h3, _) = params.forward(&tripled).unwrap();
        for r in 0..3 {
            assert_eq!(h3.row(r), h1.row(0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let params = LstmParams::zeros(8);
        assert!(params.forward(&[]).is_err());
        assert!(params.forward(&[Matrix::zeros(2, 7)]).is_err());
        assert!(params
            .forward(&[Matrix::zeros(2, 8), Matrix::zeros(3, 8)])
            .is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = LstmParams::random(8, &mut rng);
        let x = random_inputs(&mut rng, 3, 2, 8);
        let (_, tape) = params.forward(&x).unwrap();
        let g = params.backward(&tape, &Matrix::zeros(2, 8)).unwrap();
        assert!(g.params.flatten().iter().all(|&v| v == 0.0));
        assert!(g
            .inputs
            .iter()
            .all(|m| m.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn stale_tape_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = LstmParams::random(8, &mut rng);
        let x = random_inputs(&mut rng, 2, 2, 8);
        let (_, tape) = params.forward(&x).unwrap();
        params.tensors_mut()[0][0] += 1.0;
        let err = params.backward(&tape, &Matrix::zeros(2, 8)).unwrap_err();
        assert!(matches!(err, Error::StaleTape { .. }));
    }
}
