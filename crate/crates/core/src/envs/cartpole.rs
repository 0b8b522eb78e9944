use super::trajectory::{Environment, Step};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Cart position, velocity, pole angle, angular velocity, plus the number of
/// steps taken in the current episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub elapsed: usize,
}

impl CartPoleState {
    pub fn new(x: f64, x_dot: f64, theta: f64, theta_dot: f64) -> Self {
        Self {
            x,
            x_dot,
            theta,
            theta_dot,
            elapsed: 0,
        }
    }

    /// The four physical coordinates `(x, ẋ, θ, θ̇)` observed by an agent.
    pub fn observation(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

/// Pole balanced on a cart moving along a frictionless track, pushed left
/// (action 0) or right (action 1) with a constant force.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPole {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force_mag: f64,
    pub tau: f64,
    pub x_threshold: f64,
    pub theta_threshold: f64,
    pub max_steps: usize,
}

impl Default for CartPole {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            x_threshold: 2.4,
            theta_threshold: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            max_steps: 200,
        }
    }
}

impl CartPole {
    pub const N_STATE: usize = 4;
    pub const N_ACTIONS: usize = 2;

    pub fn is_upright(&self, s: &CartPoleState) -> bool {
        s.x.abs() < self.x_threshold && s.theta.abs() < self.theta_threshold
    }

    /// One explicit-Euler step of the cart-pole equations of motion.
    ///
    /// The reward is 1 when the post-step state is upright and 0 otherwise;
    /// the episode is done when it is not upright or `max_steps` is reached.
    pub fn advance(&self, s: &CartPoleState, action: usize) -> Result<(CartPoleState, f64, bool)> {
        let force = match action {
            0 => -self.force_mag,
            1 => self.force_mag,
            other => {
                return Err(Error::domain(format!(
                    "cartpole action {other} is not 0 or 1"
                )))
            }
        };
        let total_mass = self.cart_mass + self.pole_mass;
        let pole_mass_length = self.pole_mass * self.half_length;
        let (sin, cos) = s.theta.sin_cos();
        let temp = (force + pole_mass_length * s.theta_dot * s.theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;

        let next = CartPoleState {
            x: s.x + self.tau * s.x_dot,
            x_dot: s.x_dot + self.tau * x_acc,
            theta: s.theta + self.tau * s.theta_dot,
            theta_dot: s.theta_dot + self.tau * theta_acc,
            elapsed: s.elapsed + 1,
        };
        let upright = self.is_upright(&next);
        let reward = if upright { 1.0 } else { 0.0 };
        let done = !upright || next.elapsed >= self.max_steps;
        Ok((next, reward, done))
    }
}

impl Environment for CartPole {
    type State = CartPoleState;
    type Action = usize;

    /// Each coordinate uniform in `[−0.05, 0.05]`.
    fn reset(&self, rng: &mut RngStream) -> CartPoleState {
        let mut draw = || rng.uniform_range(-0.05, 0.05);
        CartPoleState::new(draw(), draw(), draw(), draw())
    }

    fn step(
        &self,
        state: &CartPoleState,
        action: &usize,
        _rng: &mut RngStream,
    ) -> Result<Step<CartPoleState>> {
        let (next, reward, done) = self.advance(state, *action)?;
        Ok(Step { next, reward, done })
    }
}
