//! Central finite-difference checks of every hand-written gradient path.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{ActorCritic, AgentConfig, StatePooling, Transition};
use crate::error::Result;
use crate::graph::AttackAction;
use crate::gse::{EmbeddingSequence, FEATURE_DIM};
use crate::neural::{LstmParams, Matrix, Parameters};

/// Central difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor of the relative error so exact zeros compare cleanly.
const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub cases: usize,
    /// Number of scalar partial derivatives compared.
    pub checked: usize,
    pub max_rel_error: f64,
    /// Path and index of the worst entry.
    pub worst: String,
}

impl GradCheckReport {
    fn record(&mut self, path: &str, index: usize, analytic: f64, numeric: f64) {
        self.checked += 1;
        let err = relative_error(analytic, numeric);
        if err > self.max_rel_error || !err.is_finite() {
            self.max_rel_error = if err.is_finite() { err } else { f64::INFINITY };
            self.worst = format!("{path}[{index}]: analytic {analytic:e}, numeric {numeric:e}");
        }
    }

    fn merge(&mut self, other: GradCheckReport) {
        self.checked += other.checked;
        if other.max_rel_error > self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst;
        }
    }
}

/// Compares `analytic` against central differences of `loss` in every
/// parameter of the model selected by `pick`.
fn check_params<M, P>(
    report: &mut GradCheckReport,
    path: &str,
    model: &mut M,
    pick: impl Fn(&mut M) -> &mut P,
    analytic: &[f64],
    loss: impl Fn(&M) -> Result<f64>,
) -> Result<()>
where
    P: Parameters,
{
    let layout: Vec<usize> = pick(model).tensors().iter().map(|t| t.len()).collect();
    let mut flat = 0;
    for (ti, len) in layout.into_iter().enumerate() {
        for k in 0..len {
            let original = pick(model).tensors()[ti][k];
            pick(model).tensors_mut()[ti][k] = original + FD_STEP;
            let plus = loss(model)?;
            pick(model).tensors_mut()[ti][k] = original - FD_STEP;
            let minus = loss(model)?;
            pick(model).tensors_mut()[ti][k] = original;
            report.record(path, flat, analytic[flat], (plus - minus) / (2.0 * FD_STEP));
            flat += 1;
        }
    }
    Ok(())
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn random_batch(rng: &mut impl Rng, n: usize, t: usize, b: usize) -> Result<Vec<Transition>> {
    (0..b)
        .map(|i| {
            let steps = (0..t)
                .map(|_| random_matrix(rng, n, FEATURE_DIM, 2.0))
                .collect();
            let mut node = || rng.random_range(0..n);
            let action = AttackAction::new(node(), node(), node(), node());
            Ok(Transition {
                embedding: Arc::new(EmbeddingSequence::new(steps)?),
                action,
                reward: rng.random_range(-0.2..0.2),
                instance_id: i,
            })
        })
        .collect()
}

/// LSTM with the scalar loss `⟨h_T, R⟩`, in parameters and inputs.
pub fn check_lstm(rng: &mut impl Rng, rows: usize, steps: usize) -> Result<GradCheckReport> {
    let mut report = GradCheckReport::default();
    let mut params = LstmParams::random(FEATURE_DIM, rng);
    let mut inputs: Vec<Matrix> = (0..steps)
        .map(|_| random_matrix(rng, rows, FEATURE_DIM, 1.5))
        .collect();
    let probe = random_matrix(rng, rows, FEATURE_DIM, 1.0);
    let loss = |p: &LstmParams, x: &[Matrix]| -> Result<f64> {
        let (h, _) = p.forward(x)?;
        Ok(h.as_slice()
            .iter()
            .zip(probe.as_slice())
            .map(|(a, b)| a * b)
            .sum())
    };

    let (_, tape) = params.forward(&inputs)?;
    let grads = params.backward(&tape, &probe)?;
    let analytic = grads.params.flatten();
    check_params(
        &mut report,
        "lstm",
        &mut params,
        |p| p,
        &analytic,
        |p| loss(p, &inputs),
    )?;

    for t in 0..steps {
        for k in 0..rows * FEATURE_DIM {
            let original = inputs[t].as_slice()[k];
            inputs[t].as_mut_slice()[k] = original + FD_STEP;
            let plus = loss(&params, &inputs)?;
            inputs[t].as_mut_slice()[k] = original - FD_STEP;
            let minus = loss(&params, &inputs)?;
            inputs[t].as_mut_slice()[k] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            report.record(
                &format!("lstm.input{t}"),
                k,
                grads.inputs[t].as_slice()[k],
                numeric,
            );
        }
    }
    Ok(report)
}

fn random_agent(rng: &mut impl Rng, n: usize) -> Result<ActorCritic> {
    let config = AgentConfig {
        hidden_sizes: vec![rng.random_range(3..8)],
        pooling: if rng.random_bool(0.5) {
            StatePooling::Flatten
        } else {
            StatePooling::Mean
        },
        ..AgentConfig::default()
    };
    ActorCritic::new(n, config, rng.random())
}

/// Q loss in the Q network and its LSTM.
pub fn check_q_loss(rng: &mut impl Rng, n: usize, t: usize, b: usize) -> Result<GradCheckReport> {
    let mut report = GradCheckReport::default();
    let mut agent = random_agent(rng, n)?;
    let batch = random_batch(rng, n, t, b)?;
    let (_, grads) = agent.q_loss_and_gradients(&batch)?;
    let loss = |a: &ActorCritic| a.q_loss(&batch);
    check_params(
        &mut report,
        "q",
        &mut agent,
        |a| &mut a.q,
        &grads.network.flatten(),
        loss,
    )?;
    check_params(
        &mut report,
        "lstm_q",
        &mut agent,
        |a| &mut a.lstm_q,
        &grads.lstm.flatten(),
        loss,
    )?;
    Ok(report)
}

/// Policy loss with the Q-gap weights frozen at their recorded values.
pub fn check_policy_loss(
    rng: &mut impl Rng,
    n: usize,
    t: usize,
    b: usize,
) -> Result<GradCheckReport> {
    let mut report = GradCheckReport::default();
    let mut agent = random_agent(rng, n)?;
    let batch = random_batch(rng, n, t, b)?;
    let (_, grads) = agent.policy_loss_and_gradients(&batch)?;
    let weights = grads.weights.clone();
    let loss = |a: &ActorCritic| a.policy_loss_with_weights(&batch, &weights);
    check_params(
        &mut report,
        "policy",
        &mut agent,
        |a| &mut a.policy,
        &grads.network.flatten(),
        loss,
    )?;
    check_params(
        &mut report,
        "lstm_p",
        &mut agent,
        |a| &mut a.lstm_p,
        &grads.lstm.flatten(),
        loss,
    )?;
    Ok(report)
}

/// `cases` randomized problems with `N ≤ 5` and `T ≤ 4`, each checking the
/// LSTM, the Q loss and the policy loss.
pub fn run_gradient_suite(cases: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        cases,
        ..GradCheckReport::default()
    };
    for _ in 0..cases {
        let n = rng.random_range(2..=5);
        let t = rng.random_range(1..=4);
        let b = rng.random_range(1..=4);
        report.merge(check_lstm(&mut rng, n * b, t)?);
        report.merge(check_q_loss(&mut rng, n, t, b)?);
        report.merge(check_policy_loss(&mut rng, n, t, b)?);
    }
    Ok(report)
}
