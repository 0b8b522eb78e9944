//! Reinforcement learning and adaptive control on small, exactly solvable
//! problems.
//!
//! Three families of learners live here:
//!
//! - policy gradient ([`pg`]): REINFORCE with a softmax network on cartpole and
//!   a linear-Gaussian policy with Adam on linear-quadratic systems,
//! - Q-learning ([`qlearn`]): temporal-difference learning with a network,
//!   replay Q-learning, and LSTD policy iteration with a quadratic Q-function,
//! - model building ([`sysid`]): ARX least squares, recursive least squares and
//!   certainty-equivalence adaptive LQ control.
//!
//! Every learned linear controller can be compared against the Riccati and
//! Lyapunov oracles in [`numerics`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod envs;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod numerics;
pub mod pg;
pub mod qlearn;
pub mod sysid;

pub use error::{Error, Result};
pub use numerics::{Matrix, Vector};
