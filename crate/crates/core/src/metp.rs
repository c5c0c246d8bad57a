//! Multi-environment attack loop.
//!
//! Several attack instances are stepped round-robin. Each step embeds the
//! current perturbed sequence, asks a strategy for an action, applies it,
//! queries the instance's oracle and hands the resulting transition back to
//! the strategy, which for the learning agent means one replay-buffer push
//! followed by one critic and one policy update.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{
    compute_reward, random_action, ActorCritic, ReplayBuffer, RewardSign, Transition,
};
use crate::error::{Error, Result};
use crate::graph::{AttackAction, AttackBudget, DynGraphSequence, EdgeSet};
use crate::gse::{degree_feature, embed_sequence, DegreeFeature, SharedEmbedding};
use crate::predictors::{LpdgOracle, Predictor};

/// One clean input sequence with the snapshot it should predict.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceData {
    pub clean: DynGraphSequence,
    pub truth: EdgeSet,
}

/// Per-instance attack state.
#[derive(Clone, Debug)]
pub struct AttackInstance {
    id: usize,
    clean: DynGraphSequence,
    feature: DegreeFeature,
    budget: AttackBudget,
    oracle: LpdgOracle,
    current: DynGraphSequence,
    clean_f1: f64,
    current_f1: f64,
    /// Steps taken in the current attempt.
    step: usize,
    steps_total: u64,
    /// Best (lowest) F1 of each attempt started so far.
    attempt_bests: Vec<f64>,
    best_f1: f64,
}

impl AttackInstance {
    /// Builds the instance and spends one query on the clean baseline.
    pub fn new(
        id: usize,
        data: InstanceData,
        predictor: Predictor,
        budget: AttackBudget,
        feature_seed: u64,
    ) -> Result<Self> {
        if budget.interaction_limit == 0 {
            return Err(Error::Config(
                "interaction limit must allow the clean query".into(),
            ));
        }
        let InstanceData { clean, truth } = data;
        if let Some(max) = truth.max_node() {
            if max >= clean.node_count() {
                return Err(Error::NodeOutOfRange {
                    index: max,
                    node_count: clean.node_count(),
                });
            }
        }
        let feature = degree_feature(&clean, feature_seed);
        let mut oracle = LpdgOracle::new(predictor, truth, budget.interaction_limit);
        let (_, clean_f1) = oracle.query(&clean)?;
        Ok(Self {
            id,
            current: clean.clone(),
            clean,
            feature,
            budget,
            oracle,
            clean_f1,
            current_f1: clean_f1,
            step: 0,
            steps_total: 0,
            attempt_bests: Vec::new(),
            best_f1: clean_f1,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn node_count(&self) -> usize {
        self.clean.node_count()
    }

    pub fn clean(&self) -> &DynGraphSequence {
        &self.clean
    }

    pub fn current(&self) -> &DynGraphSequence {
        &self.current
    }

    pub fn feature(&self) -> &DegreeFeature {
        &self.feature
    }

    pub fn budget(&self) -> &AttackBudget {
        &self.budget
    }

    pub fn clean_f1(&self) -> f64 {
        self.clean_f1
    }

    pub fn current_f1(&self) -> f64 {
        self.current_f1
    }

    pub fn best_f1(&self) -> f64 {
        self.best_f1
    }

    pub fn queries_used(&self) -> u64 {
        self.oracle.query_count()
    }

    pub fn steps_total(&self) -> u64 {
        self.steps_total
    }

    pub fn step_in_attempt(&self) -> usize {
        self.step
    }

    pub fn attempt_bests(&self) -> &[f64] {
        &self.attempt_bests
    }

    /// No further steps are possible: queries are spent or `K = 0`.
    pub fn is_exhausted(&self) -> bool {
        self.oracle.remaining() == 0 || self.budget.k_limit == 0
    }

    /// Resets to the clean sequence and opens a new attempt.
    pub fn begin_attempt(&mut self) {
        self.current = self.clean.clone();
        self.current_f1 = self.clean_f1;
        self.step = 0;
        self.attempt_bests.push(self.clean_f1);
    }

    fn needs_new_attempt(&self) -> bool {
        self.attempt_bests.is_empty() || self.step >= self.budget.k_limit
    }

    pub fn result(&self) -> InstanceResult {
        InstanceResult {
            instance: self.id,
            clean_f1: self.clean_f1,
            best_f1: self.best_f1,
            queries: self.queries_used(),
            steps: self.steps_total,
            attempts: self.attempt_bests.len(),
            k_limit: self.budget.k_limit,
            interaction_limit: self.budget.interaction_limit,
        }
    }
}

/// Final per-instance outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: usize,
    pub clean_f1: f64,
    pub best_f1: f64,
    pub queries: u64,
    pub steps: u64,
    pub attempts: usize,
    pub k_limit: usize,
    pub interaction_limit: u64,
}

/// One line of the step log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub method: String,
    pub instance: usize,
    /// 1-based attempt number.
    pub attempt: usize,
    /// 1-based step within the attempt.
    pub step: usize,
    pub action: AttackAction,
    pub f1: f64,
    pub reward: f64,
    pub queries: u64,
    pub q_loss: Option<f64>,
    pub policy_loss: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Losses {
    pub q: Option<f64>,
    pub policy: Option<f64>,
}

/// Chooses perturbations and learns from their outcome.
pub trait AttackStrategy {
    fn name(&self) -> &str;

    /// Whether [`Self::choose`] needs the degree embedding of the current sequence.
    fn needs_embedding(&self) -> bool;

    fn choose(
        &mut self,
        instance: &AttackInstance,
        embedding: Option<&SharedEmbedding>,
    ) -> Result<AttackAction>;

    fn observe(&mut self, transition: Transition) -> Result<Losses>;

    fn reward_sign(&self) -> RewardSign {
        RewardSign::Attack
    }
}

/// Actor–critic agent with its replay buffer and exploration/sampling RNG.
pub struct AgentStrategy {
    name: String,
    pub agent: ActorCritic,
    pub buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    pushes: u64,
}

impl AgentStrategy {
    pub fn new(name: impl Into<String>, agent: ActorCritic, seed: u64) -> Self {
        let buffer = ReplayBuffer::new(agent.config().buffer_capacity);
        Self {
            name: name.into(),
            agent,
            buffer,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pushes: 0,
        }
    }

    /// Total transitions pushed, including evicted ones.
    pub fn pushes(&self) -> u64 {
        self.pushes
    }
}

impl AttackStrategy for AgentStrategy {
    fn name(&self) -> &str {
        &self.name
    }

    fn needs_embedding(&self) -> bool {
        true
    }

    fn choose(
        &mut self,
        instance: &AttackInstance,
        embedding: Option<&SharedEmbedding>,
    ) -> Result<AttackAction> {
        let x = embedding.ok_or_else(|| Error::Dimension("agent needs an embedding".into()))?;
        self.agent.select_action(
            x,
            instance.steps_total() + 1,
            self.buffer.len(),
            &mut self.rng,
        )
    }

    fn observe(&mut self, transition: Transition) -> Result<Losses> {
        self.buffer.push(transition);
        self.pushes += 1;
        let batch_size = self.agent.config().batch_size;
        if self.buffer.len() < batch_size {
            return Ok(Losses::default());
        }
        let batch = self.buffer.sample(batch_size, &mut self.rng)?;
        let q = self.agent.train_q_step(&batch)?;
        let policy = self.agent.train_policy_step(&batch)?;
        Ok(Losses {
            q: Some(q),
            policy: Some(policy),
        })
    }

    fn reward_sign(&self) -> RewardSign {
        self.agent.config().reward_sign
    }
}

/// Uniformly random add/delete pairs, no learning.
pub struct RandomStrategy {
    rng: ChaCha8Rng,
}

impl RandomStrategy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl AttackStrategy for RandomStrategy {
    fn name(&self) -> &str {
        "random"
    }

    fn needs_embedding(&self) -> bool {
        false
    }

    fn choose(
        &mut self,
        instance: &AttackInstance,
        _: Option<&SharedEmbedding>,
    ) -> Result<AttackAction> {
        Ok(random_action(instance.node_count(), &mut self.rng))
    }

    fn observe(&mut self, _: Transition) -> Result<Losses> {
        Ok(Losses::default())
    }
}

/// Embeds, acts, queries, records, and trains once on `instance`.
pub fn attack_step<S: AttackStrategy + ?Sized>(
    instance: &mut AttackInstance,
    strategy: &mut S,
) -> Result<StepRecord> {
    if instance.is_exhausted() {
        return Err(Error::QueryBudgetExhausted {
            limit: instance.budget.interaction_limit,
        });
    }
    if instance.needs_new_attempt() {
        instance.begin_attempt();
    }

    let embedding: SharedEmbedding =
        Arc::new(embed_sequence(&instance.current, &instance.feature)?);
    let action = strategy.choose(instance, strategy.needs_embedding().then_some(&embedding))?;
    instance.current.apply_action_in_place(&action)?;
    let (_, f_next) = instance.oracle.query(&instance.current)?;
    let reward = compute_reward(instance.current_f1, f_next, strategy.reward_sign());

    instance.current_f1 = f_next;
    instance.step += 1;
    instance.steps_total += 1;
    let attempt_best = instance
        .attempt_bests
        .last_mut()
        .expect("attempt opened above");
    *attempt_best = attempt_best.min(f_next);
    instance.best_f1 = instance.best_f1.min(f_next);

    let losses = strategy.observe(Transition {
        embedding,
        action,
        reward,
        instance_id: instance.id,
    })?;

    Ok(StepRecord {
        method: strategy.name().to_string(),
        instance: instance.id,
        attempt: instance.attempt_bests.len(),
        step: instance.step,
        action,
        f1: f_next,
        reward,
        queries: instance.queries_used(),
        q_loss: losses.q,
        policy_loss: losses.policy,
    })
}

/// Runs one attempt from the clean sequence: up to `K` steps, fewer if
/// queries run out. Returns the lowest F1 seen, counting the clean value.
pub fn run_attempt<S: AttackStrategy + ?Sized>(
    instance: &mut AttackInstance,
    strategy: &mut S,
    sink: &mut dyn FnMut(&StepRecord) -> Result<()>,
) -> Result<f64> {
    if instance.is_exhausted() {
        return Ok(instance.clean_f1);
    }
    instance.begin_attempt();
    while instance.step < instance.budget.k_limit && !instance.is_exhausted() {
        let record = attack_step(instance, strategy)?;
        sink(&record)?;
    }
    Ok(*instance.attempt_bests.last().expect("attempt opened"))
}

/// Steps every instance in turn until all have spent their queries.
pub fn run_metp<S: AttackStrategy + ?Sized>(
    instances: &mut [AttackInstance],
    strategy: &mut S,
    sink: &mut dyn FnMut(&StepRecord) -> Result<()>,
) -> Result<Vec<InstanceResult>> {
    if instances.is_empty() {
        return Err(Error::Config("no attack instances".into()));
    }
    loop {
        let mut active = false;
        for instance in instances.iter_mut() {
            if instance.is_exhausted() {
                continue;
            }
            active = true;
            let record = attack_step(instance, strategy)?;
            sink(&record)?;
        }
        if !active {
            break;
        }
    }
    Ok(instances.iter().map(AttackInstance::result).collect())
}

/// Random add/delete attack under the same attempt and budget structure.
pub fn random_attack_baseline(
    instance: &mut AttackInstance,
    seed: u64,
    sink: &mut dyn FnMut(&StepRecord) -> Result<()>,
) -> Result<f64> {
    let mut strategy = RandomStrategy::new(seed);
    run_metp(std::slice::from_mut(instance), &mut strategy, sink)?;
    Ok(instance.best_f1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentConfig;
    use crate::graph::edge_diff;

    fn data() -> InstanceData {
        let edges: EdgeSet = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]
            .into_iter()
            .collect();
        let clean = DynGraphSequence::constant(6, &edges, 3).unwrap();
        InstanceData {
            clean,
            truth: edges,
        }
    }

    fn instance(k_cap: usize, interaction: u64) -> AttackInstance {
        let budget = AttackBudget::new(6, 1.0, k_cap, interaction).unwrap();
        AttackInstance::new(0, data(), Predictor::default(), budget, 3).unwrap()
    }

    fn no_sink() -> impl FnMut(&StepRecord) -> Result<()> {
        |_| Ok(())
    }

    #[test]
    fn clean_query_is_charged() {
        let inst = instance(4, 20);
        assert_eq!(inst.queries_used(), 1);
        assert_eq!(inst.clean_f1(), 1.0);
    }

    #[test]
    fn attempt_consumes_one_query_per_step() {
        let mut inst = instance(4, 20);
        let mut strategy = RandomStrategy::new(1);
        let best = run_attempt(&mut inst, &mut strategy, &mut no_sink()).unwrap();
        assert_eq!(inst.queries_used(), 1 + 4);
        assert_eq!(inst.step_in_attempt(), 4);
        assert!(best <= inst.clean_f1());
        assert!(edge_diff(inst.current(), inst.clean()).unwrap() <= 2 * 3 * 4);
    }

    #[test]
    fn zero_budget_attempt_returns_clean_f1() {
        let budget = AttackBudget::new(6, 0.0, 10, 5).unwrap();
        let mut inst = AttackInstance::new(0, data(), Predictor::default(), budget, 3).unwrap();
        let mut strategy = RandomStrategy::new(1);
        assert_eq!(
            run_attempt(&mut inst, &mut strategy, &mut no_sink()).unwrap(),
            1.0
        );
        assert_eq!(inst.queries_used(), 1);
        let results = run_metp(
            std::slice::from_mut(&mut inst),
            &mut strategy,
            &mut no_sink(),
        )
        .unwrap();
        assert_eq!(results[0].steps, 0);
    }

    #[test]
    fn attempt_best_is_running_minimum() {
        let mut inst = instance(6, 60);
        let mut strategy = RandomStrategy::new(2);
        let mut last_best = f64::INFINITY;
        let mut attempt = 0;
        let mut f1s = vec![inst.clean_f1()];
        while !inst.is_exhausted() {
            let r = attack_step(&mut inst, &mut strategy).unwrap();
            if r.attempt != attempt {
                attempt = r.attempt;
                last_best = f64::INFINITY;
            }
            let best = *inst.attempt_bests().last().unwrap();
            assert!(best <= last_best);
            last_best = best;
            f1s.push(r.f1);
        }
        let min = f1s.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(inst.best_f1(), min);
        assert_eq!(inst.queries_used(), 60);
        assert_eq!(inst.steps_total(), 59);
    }

    #[test]
    fn noop_action_gives_zero_reward() {
        struct Fixed;
        impl AttackStrategy for Fixed {
            fn name(&self) -> &str {
                "fixed"
            }
            fn needs_embedding(&self) -> bool {
                false
            }
            fn choose(
                &mut self,
                _: &AttackInstance,
                _: Option<&SharedEmbedding>,
            ) -> Result<AttackAction> {
                // self-loop add, delete of the absent pair {0, 5}
                Ok(AttackAction::new(2, 2, 0, 5))
            }
            fn observe(&mut self, _: Transition) -> Result<Losses> {
                Ok(Losses::default())
            }
        }
        let mut inst = instance(3, 10);
        let r = attack_step(&mut inst, &mut Fixed).unwrap();
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.f1, inst.clean_f1());
    }

    #[test]
    fn round_robin_is_fair_and_pushes_match_queries() {
        let budget = AttackBudget::new(6, 1.0, 3, 16).unwrap();
        let mut instances: Vec<AttackInstance> = (0..3)
            .map(|i| {
                AttackInstance::new(i, data(), Predictor::default(), budget, i as u64).unwrap()
            })
            .collect();
        let config = AgentConfig {
            batch_size: 4,
            buffer_capacity: 64,
            hidden_sizes: vec![4],
            ..AgentConfig::default()
        };
        let agent = ActorCritic::new(6, config, 5).unwrap();
        let mut strategy = AgentStrategy::new("gse_metp", agent, 9);
        let mut order = Vec::new();
        let results = run_metp(&mut instances, &mut strategy, &mut |r: &StepRecord| {
            order.push(r.instance);
            Ok(())
        })
        .unwrap();
        let mut counts = [0usize; 3];
        for (i, &inst) in order.iter().enumerate() {
            counts[inst] += 1;
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1, "unfair at position {i}");
        }
        let steps: u64 = results.iter().map(|r| r.steps).sum();
        assert_eq!(strategy.pushes(), steps);
        for r in &results {
            assert_eq!(r.queries, 16);
            assert_eq!(r.steps, 15);
            assert_eq!(r.attempts, 5);
        }
    }

    #[test]
    fn random_baseline_never_exceeds_clean() {
        for seed in 0..5 {
            let mut inst = instance(4, 20);
            let best = random_attack_baseline(&mut inst, seed, &mut no_sink()).unwrap();
            assert!(best <= inst.clean_f1());
            assert_eq!(inst.queries_used(), 20);
        }
    }
}
