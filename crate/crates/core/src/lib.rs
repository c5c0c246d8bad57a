//! Black-box evasion attacks on link prediction in dynamic graphs.
//!
//! An actor–critic agent perturbs a sequence of graph snapshots (one edge
//! added and one deleted per step, in every snapshot) to lower the F1 score
//! of a link predictor it can only query. Queries and perturbations are
//! budgeted per attack instance, and a single agent is trained round-robin
//! across many instances through a shared replay buffer.

pub mod agent;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod gse;
pub mod harness;
pub mod metp;
pub mod neural;
pub mod predictors;

pub use agent::{ActorCritic, AgentConfig, ReplayBuffer, RewardSign, StatePooling, Transition};
pub use error::{Error, Result};
pub use graph::{
    f1_score, perturbation_budget, AttackAction, AttackBudget, DynGraphSequence, EdgeSet, Snapshot,
};
pub use gse::{degree_feature, embed_sequence, DegreeFeature, EmbeddingSequence};
pub use metp::{AttackInstance, InstanceData, InstanceResult, StepRecord};
pub use predictors::{LpdgOracle, Predictor};
