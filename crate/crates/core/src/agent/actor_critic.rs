use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::Transition;
use crate::error::{Error, Result};
use crate::graph::AttackAction;
use crate::gse::{EmbeddingSequence, GsePair, FEATURE_DIM};
use crate::neural::{sgd_step, soft_update, Activation, LstmParams, LstmTape, Matrix, MlpParams};

/// Coordinates per action: add pair then delete pair.
pub const ACTION_DIM: usize = 4;

/// Sign convention of the per-step reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSign {
    /// `f_next − f_prev`
    Paper,
    /// `f_prev − f_next`: a drop in F1 is rewarded.
    #[default]
    Attack,
}

/// How the `N × 8` LSTM state is turned into a vector for the MLPs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatePooling {
    /// Concatenate node rows into one `8N` vector.
    #[default]
    Flatten,
    /// Average node rows into one `8` vector.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient step size.
    pub learning_rate: f64,
    /// Polyak coefficient for target networks.
    pub tau: f64,
    /// Every `exploration_interval`-th step takes a random action.
    pub exploration_interval: u64,
    pub reward_sign: RewardSign,
    pub pooling: StatePooling,
    /// Hidden widths shared by the policy and Q networks.
    pub hidden_sizes: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            buffer_capacity: 100_000,
            learning_rate: 1e-3,
            tau: 0.01,
            exploration_interval: 10,
            reward_sign: RewardSign::Attack,
            pooling: StatePooling::Flatten,
            hidden_sizes: vec![64],
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::Config(format!(
                "batch size {} must be in [1, buffer capacity {}]",
                self.batch_size, self.buffer_capacity
            )));
        }
        if self.exploration_interval == 0 {
            return Err(Error::Config(
                "exploration interval must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau {} outside [0, 1]", self.tau)));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config("hidden layer of width 0".into()));
        }
        Ok(())
    }
}

pub fn compute_reward(f_prev: f64, f_next: f64, sign: RewardSign) -> f64 {
    match sign {
        RewardSign::Paper => f_next - f_prev,
        RewardSign::Attack => f_prev - f_next,
    }
}

/// Uniform action over `[0, N)⁴`.
pub fn random_action(node_count: usize, rng: &mut impl Rng) -> AttackAction {
    let mut draw = || rng.random_range(0..node_count);
    AttackAction::new(draw(), draw(), draw(), draw())
}

/// Maps a continuous coordinate in `[0, N]` to a node index in `[0, N−1]`.
fn discretize(value: f64, node_count: usize) -> usize {
    let upper = node_count as f64 - 1e-9;
    (value.clamp(0.0, upper).floor() as usize).min(node_count - 1)
}

pub struct QGradients {
    pub network: MlpParams,
    pub lstm: LstmParams,
}

pub struct PolicyGradients {
    pub network: MlpParams,
    pub lstm: LstmParams,
    /// Clamped Q-gap per sample, held constant during differentiation.
    pub weights: Vec<f64>,
}

/// Policy and Q networks with their sequential-embedding LSTMs and target copies.
#[derive(Clone, Debug)]
pub struct ActorCritic {
    node_count: usize,
    config: AgentConfig,
    pub policy: MlpParams,
    pub policy_target: MlpParams,
    pub q: MlpParams,
    pub q_target: MlpParams,
    pub lstm_p: LstmParams,
    pub lstm_p_target: LstmParams,
    pub lstm_q: LstmParams,
    pub lstm_q_target: LstmParams,
}

impl ActorCritic {
    pub fn new(node_count: usize, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if node_count < 2 {
            return Err(Error::Config(format!("{node_count} nodes")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gse = GsePair::random(&mut rng);
        let state_dim = match config.pooling {
            StatePooling::Flatten => FEATURE_DIM * node_count,
            StatePooling::Mean => FEATURE_DIM,
        };

        let hidden = config.hidden_sizes.len();
        let mut policy_sizes = vec![state_dim];
        policy_sizes.extend(&config.hidden_sizes);
        policy_sizes.push(ACTION_DIM);
        let mut policy_acts = vec![Activation::Relu; hidden];
        policy_acts.push(Activation::Sigmoid);
        let policy = MlpParams::random(&policy_sizes, &policy_acts, &mut rng)?;

        let mut q_sizes = vec![ACTION_DIM + state_dim];
        q_sizes.extend(&config.hidden_sizes);
        q_sizes.push(1);
        let mut q_acts = vec![Activation::Relu; hidden];
        q_acts.push(Activation::None);
        let q = MlpParams::random(&q_sizes, &q_acts, &mut rng)?;

        Ok(Self {
            node_count,
            config,
            policy_target: policy.clone(),
            policy,
            q_target: q.clone(),
            q,
            lstm_p_target: gse.policy.clone(),
            lstm_p: gse.policy,
            lstm_q_target: gse.critic.clone(),
            lstm_q: gse.critic,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    fn state_dim(&self) -> usize {
        match self.config.pooling {
            StatePooling::Flatten => FEATURE_DIM * self.node_count,
            StatePooling::Mean => FEATURE_DIM,
        }
    }

    /// `(B·N) × 8` hidden rows to `B × state_dim`.
    fn pool(&self, h: Matrix, batch: usize) -> Result<Matrix> {
        match self.config.pooling {
            StatePooling::Flatten => h.reshape(batch, self.state_dim()),
            StatePooling::Mean => {
                let n = self.node_count;
                let mut out = Matrix::zeros(batch, FEATURE_DIM);
                for b in 0..batch {
                    let row = out.row_mut(b);
                    for u in 0..n {
                        for (o, v) in row.iter_mut().zip(h.row(b * n + u)) {
                            *o += v;
                        }
                    }
                    for o in row.iter_mut() {
                        *o /= n as f64;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Adjoint of [`Self::pool`].
    fn unpool(&self, grad: Matrix, batch: usize) -> Result<Matrix> {
        let n = self.node_count;
        match self.config.pooling {
            StatePooling::Flatten => grad.reshape(batch * n, FEATURE_DIM),
            StatePooling::Mean => Ok(Matrix::from_fn(batch * n, FEATURE_DIM, |r, c| {
                grad.get(r / n, c) / n as f64
            })),
        }
    }

    fn stack(&self, batch: &[Transition]) -> Result<Vec<Matrix>> {
        let sequences: Vec<&EmbeddingSequence> =
            batch.iter().map(|t| t.embedding.as_ref()).collect();
        if sequences.iter().any(|s| s.node_count() != self.node_count) {
            return Err(Error::Dimension(format!(
                "embedding node count differs from agent's {}",
                self.node_count
            )));
        }
        EmbeddingSequence::stack_rows(&sequences)
    }

    fn batch_actions(&self, batch: &[Transition]) -> Matrix {
        Matrix::from_fn(batch.len(), ACTION_DIM, |r, c| {
            batch[r].action.to_array()[c] as f64
        })
    }

    /// `[a / N | state]`
    fn q_input(&self, actions: &Matrix, state: &Matrix) -> Result<Matrix> {
        let scaled = actions.map(|a| a / self.node_count as f64);
        Matrix::hstack(&[&scaled, state])
    }

    fn state(
        &self,
        lstm: &LstmParams,
        stacked: &[Matrix],
        batch: usize,
    ) -> Result<(Matrix, LstmTape)> {
        let (h, tape) = lstm.forward(stacked)?;
        Ok((self.pool(h, batch)?, tape))
    }

    /// Continuous policy output `σ(MLP(S^p))·N` for one embedding sequence.
    pub fn policy_output(&self, x: &EmbeddingSequence) -> Result<[f64; ACTION_DIM]> {
        if x.node_count() != self.node_count {
            return Err(Error::Dimension(format!(
                "embedding over {} nodes, agent built for {}",
                x.node_count(),
                self.node_count
            )));
        }
        let (state, _) = self.state(&self.lstm_p, x.steps(), 1)?;
        let (sig, _) = self.policy.forward(&state)?;
        let n = self.node_count as f64;
        let mut out = [0.0; ACTION_DIM];
        for (o, s) in out.iter_mut().zip(sig.row(0)) {
            *o = s * n;
        }
        Ok(out)
    }

    /// Policy action rounded to node indices.
    pub fn policy_action(&self, x: &EmbeddingSequence) -> Result<AttackAction> {
        let raw = self.policy_output(x)?;
        let idx = raw.map(|v| discretize(v, self.node_count));
        Ok(AttackAction::from(idx))
    }

    /// Random while the buffer is below one batch or on every
    /// `exploration_interval`-th step; otherwise the policy action.
    pub fn select_action(
        &self,
        x: &EmbeddingSequence,
        step_index: u64,
        buffer_len: usize,
        rng: &mut impl Rng,
    ) -> Result<AttackAction> {
        if buffer_len < self.config.batch_size || step_index.is_multiple_of(self.config.exploration_interval)
        {
            return Ok(random_action(self.node_count, rng));
        }
        self.policy_action(x)
    }

    /// Mean squared error between `Q(S^q, a_b)` and `r_b`.
    pub fn q_loss(&self, batch: &[Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let stacked = self.stack(batch)?;
        let (state, _) = self.state(&self.lstm_q, &stacked, batch.len())?;
        let input = self.q_input(&self.batch_actions(batch), &state)?;
        let (q, _) = self.q.forward(&input)?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| (q.get(i, 0) - t.reward).powi(2))
            .sum::<f64>()
            / batch.len() as f64)
    }

    pub fn q_loss_and_gradients(&self, batch: &[Transition]) -> Result<(f64, QGradients)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let b = batch.len();
        let stacked = self.stack(batch)?;
        let (state, lstm_tape) = self.state(&self.lstm_q, &stacked, b)?;
        let input = self.q_input(&self.batch_actions(batch), &state)?;
        let (q, q_tape) = self.q.forward(&input)?;

        let mut loss = 0.0;
        let mut upstream = Matrix::zeros(b, 1);
        for (i, t) in batch.iter().enumerate() {
            let residual = q.get(i, 0) - t.reward;
            loss += residual * residual;
            upstream.set(i, 0, 2.0 * residual / b as f64);
        }
        loss /= b as f64;

        let (network, input_grad) = self.q.backward(&q_tape, &upstream)?;
        let state_grad = input_grad.columns(ACTION_DIM, ACTION_DIM + self.state_dim());
        let hidden_grad = self.unpool(state_grad, b)?;
        let lstm = self.lstm_q.backward_params(&lstm_tape, &hidden_grad)?;
        Ok((loss, QGradients { network, lstm }))
    }

    /// One gradient step on the Q network and its LSTM, then soft target
    /// updates. Returns the loss before the step.
    pub fn train_q_step(&mut self, batch: &[Transition]) -> Result<f64> {
        let (loss, grads) = self.q_loss_and_gradients(batch)?;
        let lr = self.config.learning_rate;
        let tau = self.config.tau;
        sgd_step(&mut self.q, &grads.network, lr)?;
        sgd_step(&mut self.lstm_q, &grads.lstm, lr)?;
        soft_update(&self.q, &mut self.q_target, tau)?;
        soft_update(&self.lstm_q, &mut self.lstm_q_target, tau)?;
        Ok(loss)
    }

    /// Continuous policy actions for the batch with their tapes.
    fn policy_batch(
        &self,
        stacked: &[Matrix],
        b: usize,
    ) -> Result<(Matrix, LstmTape, crate::neural::MlpTape)> {
        let (state, lstm_tape) = self.state(&self.lstm_p, stacked, b)?;
        let (sig, mlp_tape) = self.policy.forward(&state)?;
        let n = self.node_count as f64;
        Ok((sig.map(|s| s * n), lstm_tape, mlp_tape))
    }

    /// `max(0, Q'(S^q', a_b) − Q'(S^q', a_θ))` per sample, both on the target critic.
    pub fn q_gap_weights(&self, batch: &[Transition], policy_actions: &Matrix) -> Result<Vec<f64>> {
        let stacked = self.stack(batch)?;
        let (state, _) = self.state(&self.lstm_q_target, &stacked, batch.len())?;
        let (q_batch, _) = self
            .q_target
            .forward(&self.q_input(&self.batch_actions(batch), &state)?)?;
        let (q_policy, _) = self
            .q_target
            .forward(&self.q_input(policy_actions, &state)?)?;
        Ok((0..batch.len())
            .map(|i| (q_batch.get(i, 0) - q_policy.get(i, 0)).max(0.0))
            .collect())
    }

    /// Continuous policy actions for every sample of `batch`.
    pub fn policy_actions(&self, batch: &[Transition]) -> Result<Matrix> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let stacked = self.stack(batch)?;
        Ok(self.policy_batch(&stacked, batch.len())?.0)
    }

    /// `mean_i MSE(a_b, a_θ)_i · weights_i` with the given per-sample weights.
    pub fn policy_loss_with_weights(&self, batch: &[Transition], weights: &[f64]) -> Result<f64> {
        let a_theta = self.policy_actions(batch)?;
        Ok(weighted_action_mse(
            &self.batch_actions(batch),
            &a_theta,
            weights,
        ))
    }

    pub fn policy_loss_and_gradients(
        &self,
        batch: &[Transition],
    ) -> Result<(f64, PolicyGradients)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let b = batch.len();
        let stacked = self.stack(batch)?;
        let (a_theta, lstm_tape, mlp_tape) = self.policy_batch(&stacked, b)?;
        let weights = self.q_gap_weights(batch, &a_theta)?;
        let a_batch = self.batch_actions(batch);
        let loss = weighted_action_mse(&a_batch, &a_theta, &weights);

        // d loss / d σ-output, chained through the ×N scaling.
        let n = self.node_count as f64;
        let mut upstream = Matrix::zeros(b, ACTION_DIM);
        for (i, w) in weights.iter().enumerate() {
            let coef = w * 2.0 / (ACTION_DIM as f64 * b as f64) * n;
            for j in 0..ACTION_DIM {
                upstream.set(i, j, coef * (a_theta.get(i, j) - a_batch.get(i, j)));
            }
        }
        let (network, state_grad) = self.policy.backward(&mlp_tape, &upstream)?;
        let hidden_grad = self.unpool(state_grad, b)?;
        let lstm = self.lstm_p.backward_params(&lstm_tape, &hidden_grad)?;
        Ok((
            loss,
            PolicyGradients {
                network,
                lstm,
                weights,
            },
        ))
    }

    /// One gradient step on the policy and its LSTM, then soft target
    /// updates. Returns the loss before the step.
    pub fn train_policy_step(&mut self, batch: &[Transition]) -> Result<f64> {
        let (loss, grads) = self.policy_loss_and_gradients(batch)?;
        let lr = self.config.learning_rate;
        let tau = self.config.tau;
        sgd_step(&mut self.policy, &grads.network, lr)?;
        sgd_step(&mut self.lstm_p, &grads.lstm, lr)?;
        soft_update(&self.policy, &mut self.policy_target, tau)?;
        soft_update(&self.lstm_p, &mut self.lstm_p_target, tau)?;
        Ok(loss)
    }
}

fn weighted_action_mse(a_batch: &Matrix, a_theta: &Matrix, weights: &[f64]) -> f64 {
    let b = a_batch.rows();
    let mut total = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let mse = a_batch
            .row(i)
            .iter()
            .zip(a_theta.row(i))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / ACTION_DIM as f64;
        total += mse * w;
    }
    total / b as f64
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::neural::Parameters;

    fn tiny_agent(n: usize) -> ActorCritic {
        let config = AgentConfig {
            batch_size: 2,
            buffer_capacity: 16,
            hidden_sizes: vec![5],
            ..AgentConfig::default()
        };
        ActorCritic::new(n, config, 17).unwrap()
    }

    fn transition(n: usize, seed: u64, action: [usize; 4], reward: f64) -> Transition {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = (0..3)
            .map(|_| Matrix::from_fn(n, FEATURE_DIM, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        Transition {
            embedding: Arc::new(EmbeddingSequence::new(steps).unwrap()),
            action: action.into(),
            reward,
            instance_id: 0,
        }
    }

    #[test]
    fn reward_signs() {
        assert_eq!(compute_reward(0.4, 0.4, RewardSign::Attack), 0.0);
        assert_eq!(compute_reward(0.4, 0.4, RewardSign::Paper), 0.0);
        assert!((compute_reward(0.9, 0.7, RewardSign::Attack) - 0.2).abs() < 1e-15);
        assert!((compute_reward(0.9, 0.7, RewardSign::Paper) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn discretize_never_reaches_n() {
        assert_eq!(discretize(0.999_999 * 10.0, 10), 9);
        assert_eq!(discretize(10.0, 10), 9);
        assert_eq!(discretize(-0.5, 10), 0);
        assert_eq!(discretize(3.7, 10), 3);
    }

    #[test]
    fn random_phase_until_buffer_holds_a_batch() {
        let agent = tiny_agent(6);
        let x = transition(6, 1, [0, 1, 2, 3], 0.0).embedding;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::HashSet::new();
        for step in 1..200 {
            let a = agent.select_action(&x, step, 0, &mut rng).unwrap();
            assert!(a.to_array().iter().all(|&c| c < 6));
            seen.insert(a);
        }
        assert!(seen.len() > 50);
    }

    #[test]
    fn policy_action_is_deterministic_outside_exploration() {
        let agent = tiny_agent(6);
        let x = transition(6, 1, [0, 1, 2, 3], 0.0).embedding;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = agent.select_action(&x, 3, 100, &mut rng).unwrap();
        let b = agent.select_action(&x, 7, 100, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, agent.policy_action(&x).unwrap());
    }

    #[test]
    fn empty_batches_rejected() {
        let mut agent = tiny_agent(4);
        assert!(matches!(agent.train_q_step(&[]), Err(Error::EmptyBatch)));
        assert!(matches!(
            agent.train_policy_step(&[]),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn q_step_soft_updates_targets_exactly() {
        let mut agent = tiny_agent(4);
        let batch = vec![
            transition(4, 1, [0, 1, 2, 3], 0.3),
            transition(4, 2, [3, 1, 0, 2], -0.1),
        ];
        let old_target = agent.q_target.flatten();
        let old_lstm_target = agent.lstm_q_target.flatten();
        let policy_before = (
            agent.policy.clone(),
            agent.lstm_p.clone(),
            agent.policy_target.clone(),
        );
        agent.train_q_step(&batch).unwrap();
        let tau = agent.config().tau;
        for ((t, o), old) in agent
            .q_target
            .flatten()
            .iter()
            .zip(agent.q.flatten())
            .zip(old_target)
        {
            assert_eq!(*t, tau * o + (1.0 - tau) * old);
        }
        for ((t, o), old) in agent
            .lstm_q_target
            .flatten()
            .iter()
            .zip(agent.lstm_q.flatten())
            .zip(old_lstm_target)
        {
            assert_eq!(*t, tau * o + (1.0 - tau) * old);
        }
        assert_eq!(agent.policy.flatten(), policy_before.0.flatten());
        assert_eq!(agent.lstm_p.flatten(), policy_before.1.flatten());
        assert_eq!(agent.policy_target.flatten(), policy_before.2.flatten());
    }

    #[test]
    fn policy_step_leaves_critic_untouched() {
        let mut agent = tiny_agent(4);
        let batch = vec![
            transition(4, 1, [0, 1, 2, 3], 0.3),
            transition(4, 2, [3, 1, 0, 2], -0.1),
        ];
        let critic = (
            agent.q.flatten(),
            agent.q_target.flatten(),
            agent.lstm_q.flatten(),
            agent.lstm_q_target.flatten(),
        );
        agent.train_policy_step(&batch).unwrap();
        assert_eq!(critic.0, agent.q.flatten());
        assert_eq!(critic.1, agent.q_target.flatten());
        assert_eq!(critic.2, agent.lstm_q.flatten());
        assert_eq!(critic.3, agent.lstm_q_target.flatten());
    }

    #[test]
    fn zero_gap_means_zero_policy_loss() {
        let mut agent = tiny_agent(4);
        let batch = vec![transition(4, 1, [0, 1, 2, 3], 0.3)];
        // A constant critic makes every gap zero.
        for t in agent.q_target.tensors_mut() {
            t.fill(0.0);
        }
        let before = agent.policy.flatten();
        let loss = agent.train_policy_step(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(before, agent.policy.flatten());
    }

    #[test]
    fn mean_pooling_agent_trains() {
        let config = AgentConfig {
            batch_size: 2,
            buffer_capacity: 16,
            pooling: StatePooling::Mean,
            hidden_sizes: vec![6],
            ..AgentConfig::default()
        };
        let mut agent = ActorCritic::new(5, config, 3).unwrap();
        let batch = vec![
            transition(5, 1, [0, 1, 2, 3], 0.3),
            transition(5, 2, [4, 1, 0, 2], -0.1),
        ];
        let first = agent.train_q_step(&batch).unwrap();
        assert!(first.is_finite());
        agent.train_policy_step(&batch).unwrap();
    }

    #[test]
    fn config_validation() {
        let bad = AgentConfig {
            batch_size: 10,
            buffer_capacity: 5,
            ..AgentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AgentConfig {
            exploration_interval: 0,
            ..AgentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
