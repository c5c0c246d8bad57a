//! Deterministic-policy actor–critic over graph sequential embeddings,
//! trained from a replay buffer shared by every attack instance.

mod actor_critic;
mod buffer;

pub use actor_critic::{
    compute_reward, random_action, ActorCritic, AgentConfig, PolicyGradients, QGradients,
    RewardSign, StatePooling, ACTION_DIM,
};
pub use buffer::{buffer_push, buffer_sample, ReplayBuffer, Transition};
