use super::trajectory::{Environment, Step};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

const ROW_SUM_TOL: f64 = 1e-9;

/// One possible result of taking an action in a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    pub reward: f64,
    pub next_state: usize,
}

impl Outcome {
    pub const fn new(probability: f64, reward: f64, next_state: usize) -> Self {
        Self {
            probability,
            reward,
            next_state,
        }
    }
}

/// Finite MDP with one transition matrix per action and a stochastic reward
/// attached to every `(state, action)` pair.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    transitions: Vec<Matrix>,
    /// `outcomes[s][a]`
    outcomes: Vec<Vec<Vec<Outcome>>>,
    pub gamma: f64,
    pub initial_state: usize,
}

impl TabularMdp {
    /// Builds and validates an MDP.
    ///
    /// Every transition row must sum to one, every `(s, a)` outcome list must
    /// have probabilities summing to one, and the outcome next-state marginals
    /// must reproduce the transition row.
    pub fn new(
        transitions: Vec<Matrix>,
        outcomes: Vec<Vec<Vec<Outcome>>>,
        gamma: f64,
    ) -> Result<Self> {
        let n_a = transitions.len();
        if n_a == 0 {
            return Err(Error::dim("an MDP needs at least one action"));
        }
        let n_s = transitions[0].nrows();
        if n_s == 0 {
            return Err(Error::dim("an MDP needs at least one state"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(format!("discount {gamma} outside [0, 1]")));
        }
        for (a, p) in transitions.iter().enumerate() {
            if p.shape() != (n_s, n_s) {
                return Err(Error::dim(format!(
                    "transition matrix for action {a} is {:?}, expected {n_s}x{n_s}",
                    p.shape()
                )));
            }
            if p.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::domain(format!(
                    "negative transition probability for action {a}"
                )));
            }
            for s in 0..n_s {
                let sum = p.row(s).sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::domain(format!(
                        "row {s} of the action-{a} transition matrix sums to {sum}"
                    )));
                }
            }
        }
        if outcomes.len() != n_s || outcomes.iter().any(|row| row.len() != n_a) {
            return Err(Error::dim(format!(
                "outcome table must be indexed [{n_s} states][{n_a} actions]"
            )));
        }
        for s in 0..n_s {
            for a in 0..n_a {
                let list = &outcomes[s][a];
                let total: f64 = list.iter().map(|o| o.probability).sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::domain(format!(
                        "outcomes of (s{s}, a{a}) have total probability {total}"
                    )));
                }
                let mut marginal = vec![0.0; n_s];
                for o in list {
                    if o.next_state >= n_s || !(o.probability >= 0.0) {
                        return Err(Error::domain(format!(
                            "invalid outcome {o:?} at (s{s}, a{a})"
                        )));
                    }
                    marginal[o.next_state] += o.probability;
                }
                for (j, m) in marginal.iter().enumerate() {
                    if (m - transitions[a][(s, j)]).abs() > ROW_SUM_TOL {
                        return Err(Error::domain(format!(
                            "outcomes of (s{s}, a{a}) reach s{j} with probability {m}, \
                             transition matrix says {}",
                            transitions[a][(s, j)]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            transitions,
            outcomes,
            gamma,
            initial_state: 0,
        })
    }

    /// MDP whose reward depends only on `(s, a)`: `reward[s][a]`.
    pub fn with_deterministic_rewards(
        transitions: Vec<Matrix>,
        reward: &[Vec<f64>],
        gamma: f64,
    ) -> Result<Self> {
        let n_s = transitions.first().map_or(0, |p| p.nrows());
        let n_a = transitions.len();
        if reward.len() != n_s || reward.iter().any(|r| r.len() != n_a) {
            return Err(Error::dim("reward table must be [n_s][n_a]"));
        }
        let outcomes = (0..n_s)
            .map(|s| {
                (0..n_a)
                    .map(|a| {
                        (0..n_s)
                            .filter(|&j| transitions[a][(s, j)] > 0.0)
                            .map(|j| Outcome::new(transitions[a][(s, j)], reward[s][a], j))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(transitions, outcomes, gamma)
    }

    /// The three-state, two-action worked example: from `s1` under `a0` the
    /// reward is −1 (stay in `s1`) with probability 0.1, +5 (to `s0`) with
    /// probability 0.7 and +5 (to `s2`) with probability 0.2. Transitions whose
    /// reward is not given carry reward 0.
    pub fn example_one() -> Self {
        let p0 = Matrix::from_row_slice(3, 3, &[0.5, 0.0, 0.5, 0.7, 0.1, 0.2, 0.4, 0.0, 0.6]);
        let p1 = Matrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.95, 0.05, 0.3, 0.3, 0.4]);
        let zero_reward = |p: &Matrix, s: usize| -> Vec<Outcome> {
            (0..3)
                .filter(|&j| p[(s, j)] > 0.0)
                .map(|j| Outcome::new(p[(s, j)], 0.0, j))
                .collect()
        };
        let mut outcomes: Vec<Vec<Vec<Outcome>>> = (0..3)
            .map(|s| vec![zero_reward(&p0, s), zero_reward(&p1, s)])
            .collect();
        outcomes[1][0] = vec![
            Outcome::new(0.1, -1.0, 1),
            Outcome::new(0.7, 5.0, 0),
            Outcome::new(0.2, 5.0, 2),
        ];
        Self::new(vec![p0, p1], outcomes, 0.9).expect("example MDP is valid")
    }

    pub fn n_states(&self) -> usize {
        self.transitions[0].nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition(&self, action: usize) -> &Matrix {
        &self.transitions[action]
    }

    pub fn outcomes(&self, s: usize, a: usize) -> Result<&[Outcome]> {
        self.check(s, a)?;
        Ok(&self.outcomes[s][a])
    }

    /// Row sums of every transition matrix, indexed `[action][state]`.
    pub fn row_sums(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .map(|p| p.row_iter().map(|r| r.sum()).collect())
            .collect()
    }

    fn check(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.n_states() || a >= self.n_actions() {
            return Err(Error::domain(format!(
                "(s{s}, a{a}) outside {} states x {} actions",
                self.n_states(),
                self.n_actions()
            )));
        }
        Ok(())
    }

    /// Samples an outcome of `(s, a)`; returns `(next_state, reward)`.
    pub fn sample(&self, s: usize, a: usize, rng: &mut RngStream) -> Result<(usize, f64)> {
        self.check(s, a)?;
        let list = &self.outcomes[s][a];
        let probs: Vec<f64> = list.iter().map(|o| o.probability).collect();
        let o = list[rng.choice(&probs)?];
        Ok((o.next_state, o.reward))
    }

    /// Exact immediate reward `E[r(s, a)]`.
    pub fn expected_reward(&self, s: usize, a: usize) -> Result<f64> {
        self.check(s, a)?;
        Ok(compensated_sum(
            self.outcomes[s][a].iter().map(|o| o.probability * o.reward),
        ))
    }
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

impl Environment for TabularMdp {
    type State = usize;
    type Action = usize;

    fn reset(&self, _rng: &mut RngStream) -> usize {
        self.initial_state
    }

    fn step(&self, state: &usize, action: &usize, rng: &mut RngStream) -> Result<Step<usize>> {
        let (next, reward) = self.sample(*state, *action, rng)?;
        Ok(Step {
            next,
            reward,
            done: false,
        })
    }
}
