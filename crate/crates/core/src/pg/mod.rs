//! Policy gradient.
//!
//! [`SoftmaxPolicyAgent`] is REINFORCE for discrete actions: a softmax network
//! trained by weighted cross-entropy with standardized rewards-to-go as sample
//! weights. [`LinearGaussianPolicy`] with [`pg_train_lq`] is the continuous
//! counterpart for linear-quadratic systems: a Gaussian policy around `K s`,
//! a per-trajectory baseline and Adam ascent on the gain.

mod discrete;
mod linear;

pub(crate) use discrete::argmax;

pub use discrete::{standardized_rewards_to_go, SoftmaxPolicyAgent, Standardized};
pub use linear::{
    gaussian_log_likelihood, pg_gradient_linear, pg_train_lq, trajectory_reward,
    LinearGaussianPolicy, PgIteration, PgLqConfig, PgLqTrainer,
};
