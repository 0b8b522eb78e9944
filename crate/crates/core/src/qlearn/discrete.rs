use crate::error::{Error, Result};
use crate::mlp::{batch_from_rows, Activation, LossKind, Mlp};
use crate::numerics::RngStream;
use crate::pg::argmax;

use super::replay::{ReplayMemory, Transition};

pub const EPSILON_DECAY: f64 = 0.995;
pub const EPSILON_FLOOR: f64 = 0.01;

/// Q-network with one linear output per action.
#[derive(Debug, Clone)]
pub struct DiscreteQAgent {
    pub network: Mlp,
    epsilon: f64,
    pub gamma: f64,
}

impl DiscreteQAgent {
    /// Network `n_s → hidden ×3 (relu) → n_a (linear)` with an MSE loss.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        hidden: usize,
        gamma: f64,
        epsilon: f64,
        learning_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let network = Mlp::new(
            &[n_states, hidden, hidden, hidden, n_actions],
            &[
                Activation::Relu,
                Activation::Relu,
                Activation::Relu,
                Activation::Linear,
            ],
            LossKind::MeanSquaredError,
            seed,
        )?
        .with_learning_rate(learning_rate)?;
        Self::from_network(network, gamma, epsilon)
    }

    pub fn from_network(network: Mlp, gamma: f64, epsilon: f64) -> Result<Self> {
        if network.loss_kind() != LossKind::MeanSquaredError {
            return Err(Error::Config(
                "a Q-network is trained with the MSE loss".into(),
            ));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(format!("discount {gamma} outside [0, 1]")));
        }
        let mut agent = Self {
            network,
            epsilon: 0.0,
            gamma,
        };
        agent.set_epsilon(epsilon)?;
        Ok(agent)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::domain(format!(
                "exploration rate {epsilon} outside [0, 1]"
            )));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.network.output_width()
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.network.forward_one(state)
    }

    pub fn greedy_action(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(state)?))
    }

    /// A uniform random action when a uniform draw is at most ε, else the
    /// greedy one.
    pub fn epsilon_greedy_action(&self, state: &[f64], rng: &mut RngStream) -> Result<usize> {
        if self.epsilon > 0.0 && rng.uniform() <= self.epsilon {
            Ok(rng.index(self.n_actions()))
        } else {
            self.greedy_action(state)
        }
    }

    /// TD targets: current predictions, except the taken-action entry set to
    /// `r` (terminal) or `r + γ max Q(s', ·)`.
    pub fn td_targets<S: AsRef<[f64]>>(
        &self,
        states: &[S],
        actions: &[usize],
        rewards: &[f64],
        next_states: &[S],
        dones: &[bool],
    ) -> Result<(crate::Matrix, crate::Matrix)> {
        let n = states.len();
        if n == 0
            || actions.len() != n
            || rewards.len() != n
            || next_states.len() != n
            || dones.len() != n
        {
            return Err(Error::dim(
                "TD batch lists must be nonempty and of equal length",
            ));
        }
        let inputs = batch_from_rows(states)?;
        let mut targets = self.network.forward(&inputs)?;
        let next_q = if dones.iter().all(|&d| d) {
            None
        } else {
            Some(self.network.forward(&batch_from_rows(next_states)?)?)
        };
        for i in 0..n {
            if actions[i] >= targets.ncols() {
                return Err(Error::domain(format!("action {} out of range", actions[i])));
            }
            targets[(i, actions[i])] = if dones[i] {
                rewards[i]
            } else {
                let q = next_q
                    .as_ref()
                    .expect("computed when any transition is live");
                rewards[i] + self.gamma * q.row(i).max()
            };
        }
        Ok((inputs, targets))
    }

    /// One MSE step towards the TD targets. Returns the pre-update loss.
    pub fn td_update<S: AsRef<[f64]>>(
        &mut self,
        states: &[S],
        actions: &[usize],
        rewards: &[f64],
        next_states: &[S],
        dones: &[bool],
    ) -> Result<f64> {
        let (inputs, targets) = self.td_targets(states, actions, rewards, next_states, dones)?;
        self.network.train_on_batch(&inputs, &targets, None)
    }

    /// `ε ← max(floor, ε·decay)`.
    pub fn decay_epsilon(&mut self, decay: f64, floor: f64) {
        self.epsilon = (self.epsilon * decay).max(floor);
    }

    /// Samples a batch from memory, takes one TD step on it, then decays ε.
    pub fn replay(
        &mut self,
        memory: &ReplayMemory,
        batch_size: usize,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let batch = memory.sample(batch_size, rng)?;
        let loss = self.td_update(
            &batch.states,
            &batch.actions,
            &batch.rewards,
            &batch.next_states,
            &batch.dones,
        )?;
        self.decay_epsilon(EPSILON_DECAY, EPSILON_FLOOR);
        Ok(loss)
    }

    pub fn remember(
        memory: &mut ReplayMemory,
        s: &[f64],
        a: usize,
        r: f64,
        next: &[f64],
        done: bool,
    ) {
        memory.remember(Transition {
            state: s.to_vec(),
            action: a,
            reward: r,
            next_state: next.to_vec(),
            done,
        });
    }
}
