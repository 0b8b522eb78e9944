//! Q-learning: network TD learning with ε-greedy exploration and an optional
//! replay memory for discrete actions, and LSTD policy iteration on a
//! quadratic Q-function for linear-quadratic problems.

mod discrete;
mod lq;
mod replay;

pub use discrete::{DiscreteQAgent, EPSILON_DECAY, EPSILON_FLOOR};
pub use lq::{
    gaussian_exploration_action, lstd_evaluate, q_learning_lq, q_learning_lq_traced, LqQlConfig,
    QlIteration, QuadraticQ,
};
pub use replay::{ReplayBatch, ReplayMemory, Transition, DEFAULT_CAPACITY};
