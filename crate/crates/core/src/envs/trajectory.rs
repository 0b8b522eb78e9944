use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// One environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<S> {
    pub next: S,
    /// Reward for reward-maximizing environments, cost for the LQ system.
    pub reward: f64,
    pub done: bool,
}

/// A simulated system with a reset distribution and a one-step transition.
pub trait Environment {
    type State: Clone;
    type Action: Clone;

    fn reset(&self, rng: &mut RngStream) -> Self::State;

    fn step(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut RngStream,
    ) -> Result<Step<Self::State>>;
}

/// Parallel record of one rollout.
///
/// `rewards` holds rewards `r_t` for cartpole and the tabular MDP, and costs
/// `c_t = −r_t` for the linear-quadratic system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S, A> {
    pub states: Vec<S>,
    pub actions: Vec<A>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<S>,
    pub dones: Vec<bool>,
}

impl<S, A> Default for Trajectory<S, A> {
    fn default() -> Self {
        Self {
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            dones: Vec::new(),
        }
    }
}

impl<S, A> Trajectory<S, A> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, state: S, action: A, reward: f64, next: S, done: bool) {
        self.states.push(state);
        self.actions.push(action);
        self.rewards.push(reward);
        self.next_states.push(next);
        self.dones.push(done);
    }

    /// Sum of the recorded rewards (or costs).
    pub fn total(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Appends another trajectory's records.
    pub fn extend(&mut self, other: Trajectory<S, A>) {
        self.states.extend(other.states);
        self.actions.extend(other.actions);
        self.rewards.extend(other.rewards);
        self.next_states.extend(other.next_states);
        self.dones.extend(other.dones);
    }
}

impl<S: PartialEq + std::fmt::Debug, A> Trajectory<S, A> {
    /// Checks the structural invariants: equal list lengths, `done` only on
    /// the last record, and `next_states[i] == states[i + 1]`.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.states.len();
        if [
            self.actions.len(),
            self.rewards.len(),
            self.next_states.len(),
            self.dones.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::dim("trajectory lists have different lengths"));
        }
        for i in 0..n {
            if self.dones[i] && i + 1 != n {
                return Err(Error::domain(format!("done flag set at interior step {i}")));
            }
            if i + 1 < n && self.next_states[i] != self.states[i + 1] {
                return Err(Error::domain(format!(
                    "next state at step {i} does not chain: {:?} vs {:?}",
                    self.next_states[i],
                    self.states[i + 1]
                )));
            }
        }
        Ok(())
    }
}

/// Runs one episode: reset, then act/step/record until `done` or `horizon`
/// steps.
pub fn rollout<E, P>(
    env: &E,
    mut policy: P,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<Trajectory<E::State, E::Action>>
where
    E: Environment,
    P: FnMut(&E::State, &mut RngStream) -> Result<E::Action>,
{
    if horizon == 0 {
        return Err(Error::domain("rollout horizon must be at least 1"));
    }
    let mut traj = Trajectory::new();
    let mut state = env.reset(rng);
    for _ in 0..horizon {
        let action = policy(&state, rng)?;
        let step = env.step(&state, &action, rng)?;
        let done = step.done;
        traj.push(state, action, step.reward, step.next.clone(), done);
        if done {
            break;
        }
        state = step.next;
    }
    Ok(traj)
}
