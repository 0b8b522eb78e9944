use crate::envs::rewards_to_go;
use crate::error::{Error, Result};
use crate::mlp::{batch_from_rows, to_categorical, Activation, LossKind, Mlp};
use crate::numerics::RngStream;

/// Softmax policy network over `n_a` discrete actions.
#[derive(Debug, Clone)]
pub struct SoftmaxPolicyAgent {
    pub network: Mlp,
    pub gamma: f64,
    n_actions: usize,
}

/// Standardized sample weights; `degenerate` marks the all-equal case where
/// the weights are returned as zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub weights: Vec<f64>,
    pub degenerate: bool,
}

/// Discounted rewards-to-go, shifted to zero mean and scaled to unit
/// population standard deviation.
pub fn standardized_rewards_to_go(rewards: &[f64], gamma: f64) -> Result<Standardized> {
    let to_go = rewards_to_go(rewards, gamma)?;
    let n = to_go.len() as f64;
    let mean = to_go.iter().sum::<f64>() / n;
    let std = (to_go.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(std > 1e-12 * mean.abs().max(1.0)) {
        log::warn!("rewards-to-go have zero spread; using zero weights");
        return Ok(Standardized {
            weights: vec![0.0; to_go.len()],
            degenerate: true,
        });
    }
    Ok(Standardized {
        weights: to_go.iter().map(|v| (v - mean) / std).collect(),
        degenerate: false,
    })
}

impl SoftmaxPolicyAgent {
    /// Policy network `n_s → hidden → hidden → n_a (softmax)`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        hidden: usize,
        gamma: f64,
        learning_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let network = Mlp::new(
            &[n_states, hidden, hidden, n_actions],
            &[Activation::Relu, Activation::Relu, Activation::Softmax],
            LossKind::WeightedCrossEntropy,
            seed,
        )?
        .with_learning_rate(learning_rate)?;
        Self::from_network(network, gamma)
    }

    pub fn from_network(network: Mlp, gamma: f64) -> Result<Self> {
        let last = network.layers().last().expect("network has layers");
        if last.activation != Activation::Softmax {
            return Err(Error::Config("policy network needs a softmax head".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(format!("discount {gamma} outside [0, 1]")));
        }
        let n_actions = network.output_width();
        Ok(Self {
            network,
            gamma,
            n_actions,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn probabilities(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.network.forward_one(state)
    }

    /// Samples an action from the softmax output.
    pub fn sample_action(&self, state: &[f64], rng: &mut RngStream) -> Result<usize> {
        let probs = self.probabilities(state)?;
        rng.choice(&probs)
    }

    /// Most probable action, lowest index on ties.
    pub fn greedy_action(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.probabilities(state)?))
    }

    /// One REINFORCE step on an episode: one-hot targets for the taken
    /// actions weighted by standardized rewards-to-go.
    pub fn update<S: AsRef<[f64]>>(
        &mut self,
        states: &[S],
        actions: &[usize],
        rewards: &[f64],
    ) -> Result<f64> {
        if states.is_empty() || states.len() != actions.len() || actions.len() != rewards.len() {
            return Err(Error::dim(format!(
                "episode lists have lengths {}, {}, {}",
                states.len(),
                actions.len(),
                rewards.len()
            )));
        }
        let weights = standardized_rewards_to_go(rewards, self.gamma)?;
        let inputs = batch_from_rows(states)?;
        let targets = batch_from_rows(
            &actions
                .iter()
                .map(|&a| to_categorical(a, self.n_actions))
                .collect::<Result<Vec<_>>>()?,
        )?;
        self.network
            .train_on_batch(&inputs, &targets, Some(&weights.weights))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::Dense;
    use crate::numerics::{Matrix, Vector};

    #[test]
    fn standardized_by_hand() {
        let s = standardized_rewards_to_go(&[1.0, 1.0, 1.0], 1.0).unwrap();
        let r = 1.5f64.sqrt();
        assert!(!s.degenerate);
        for (a, b) in s.weights.iter().zip([r, 0.0, -r]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardized_moments() {
        let s = standardized_rewards_to_go(&[0.3, -1.0, 2.0, 5.0, 0.0, 1.0], 0.9).unwrap();
        let n = s.weights.len() as f64;
        let mean = s.weights.iter().sum::<f64>() / n;
        let std = (s.weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_to_go_is_degenerate() {
        // γ = 0 makes the rewards-to-go equal to the rewards
        let s = standardized_rewards_to_go(&[2.0, 2.0, 2.0], 0.0).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.weights, vec![0.0; 3]);
        assert!(standardized_rewards_to_go(&[], 0.5).is_err());
    }

    fn zero_agent(n_a: usize) -> SoftmaxPolicyAgent {
        let mut agent = SoftmaxPolicyAgent::new(3, n_a, 8, 0.99, 1e-2, 0).unwrap();
        let zeros = vec![0.0; agent.network.parameter_count()];
        agent.network.set_parameters(&zeros).unwrap();
        agent
    }

    #[test]
    fn zero_network_samples_uniformly() {
        let agent = zero_agent(3);
        let mut rng = RngStream::new(4);
        let n = 10_000;
        let mut counts = [0.0; 3];
        for _ in 0..n {
            counts[agent.sample_action(&[0.1, 0.2, 0.3], &mut rng).unwrap()] += 1.0;
        }
        let expected = n as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|c| (c - expected).powi(2) / expected)
            .sum();
        // 99.9% quantile of χ² with 2 degrees of freedom
        assert!(chi2 < 13.82, "chi2 {chi2}");
    }

    #[test]
    fn forced_output_always_picks_it() {
        let layer = Dense {
            weights: Matrix::zeros(2, 1),
            bias: Vector::from_vec(vec![100.0, -100.0]),
            activation: Activation::Softmax,
        };
        let net = Mlp::from_layers(vec![layer], LossKind::WeightedCrossEntropy).unwrap();
        let agent = SoftmaxPolicyAgent::from_network(net, 0.99).unwrap();
        let mut rng = RngStream::new(1);
        for _ in 0..1000 {
            assert_eq!(agent.sample_action(&[0.5], &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let agent = SoftmaxPolicyAgent::new(3, 4, 8, 0.99, 1e-3, 5).unwrap();
        let draw = |seed| {
            let mut rng = RngStream::new(seed);
            (0..50)
                .map(|_| agent.sample_action(&[0.3, -0.1, 0.2], &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn degenerate_update_leaves_parameters() {
        let mut agent = SoftmaxPolicyAgent::new(3, 2, 8, 0.0, 1e-2, 2).unwrap();
        let before = agent.network.parameters();
        agent
            .update(&[[0.1, 0.2, 0.3], [0.0, 0.1, 0.0]], &[0, 1], &[1.0, 1.0])
            .unwrap();
        assert_eq!(agent.network.parameters(), before);
    }

    fn single_sample_shift(weight_sign: f64) -> f64 {
        // Two-step episode at the same state: the first step carries the
        // larger reward-to-go, so its standardized weight is +1, the second −1.
        let mut agent = SoftmaxPolicyAgent::new(3, 2, 8, 1.0, 1e-2, 6).unwrap();
        let s = [0.4, -0.3, 0.2];
        let p0 = agent.probabilities(&s).unwrap()[0];
        let (actions, rewards) = if weight_sign > 0.0 {
            ([0, 1], [1.0, 0.0])
        } else {
            ([1, 0], [1.0, 0.0])
        };
        agent.update(&[s, s], &actions, &rewards).unwrap();
        agent.probabilities(&s).unwrap()[0] - p0
    }

    #[test]
    fn positive_weight_raises_probability() {
        assert!(single_sample_shift(1.0) > 0.0);
    }

    #[test]
    fn negative_weight_lowers_probability() {
        assert!(single_sample_shift(-1.0) < 0.0);
    }

    #[test]
    fn one_sample_weight_sign_moves_log_probability() {
        for (weight, up) in [(1.0, true), (-1.0, false), (0.5, true), (-2.0, false)] {
            for action in 0..2 {
                let mut agent = SoftmaxPolicyAgent::new(3, 2, 8, 0.99, 1e-2, 11).unwrap();
                let s = [0.2, 0.1, -0.5];
                let before = agent.probabilities(&s).unwrap()[action].ln();
                let x = batch_from_rows(&[s]).unwrap();
                let y = batch_from_rows(&[to_categorical(action, 2).unwrap()]).unwrap();
                agent
                    .network
                    .train_on_batch(&x, &y, Some(&[weight]))
                    .unwrap();
                let after = agent.probabilities(&s).unwrap()[action].ln();
                assert_eq!(after > before, up, "weight {weight}, action {action}");
            }
        }
    }

    #[test]
    fn mismatched_episode_is_rejected() {
        let mut agent = SoftmaxPolicyAgent::new(3, 2, 8, 0.99, 1e-3, 0).unwrap();
        assert!(agent.update(&[[0.0; 3]], &[0, 1], &[1.0]).is_err());
        assert!(agent.update::<[f64; 3]>(&[], &[], &[]).is_err());
    }
}
