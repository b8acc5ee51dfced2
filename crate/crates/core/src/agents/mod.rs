//! The learning user and the exact best-response oracle.
//!
//! Only the user learns. It keeps a tabular Q-function over an observable key
//! of the joint state, picks prompts with a fixed-temperature softmax and
//! updates with the one-step Q-learning target. [`bellman`] solves the same
//! problem exactly on the enumerated MDP for cross-checking.

pub mod bellman;
mod policy;
mod qlearning;
mod reward;

pub use policy::FrozenPolicy;
pub use bellman::{evaluate_policy, value_iteration, FiniteMdp, ValueIteration};
pub use qlearning::{
    q_update, softmax_probabilities, softmax_select, AgentParams, PolicyStep, QInit, QLearner, QTable, StateKey,
};
pub use reward::{compute_reward, RewardSpec, RewardVariant};
