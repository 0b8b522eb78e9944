//! Environments and the rollout protocol.
//!
//! Three environments are provided: a finite MDP with stochastic rewards, the
//! cartpole balancing task with two discrete actions, and a linear system with
//! Gaussian process noise and quadratic cost. All implement [`Environment`], so
//! [`rollout`] produces a [`Trajectory`] for any of them.

mod cartpole;
mod lq;
mod mdp;
mod returns;
mod trajectory;

pub use cartpole::{CartPole, CartPoleState};
pub use lq::LinearQuadraticEnv;
pub use mdp::{Outcome, TabularMdp};
pub use returns::{average_cost, rewards_to_go, total_reward, undiscounted_return};
pub use trajectory::{rollout, Environment, Step, Trajectory};
