use serde::{Deserialize, Serialize};

use crate::envs::{rollout, LinearQuadraticEnv, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{AdamState, Matrix, RngStream, Vector};

/// Gaussian policy `a ~ N(K s, σ² I)`; with sampling off it acts as `a = K s`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianPolicy {
    pub k: Matrix,
    pub sigma: f64,
    pub sampling: bool,
}

impl LinearGaussianPolicy {
    pub fn new(k: Matrix, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!(
                "exploration std must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            k,
            sigma,
            sampling: true,
        })
    }

    pub fn deterministic(k: Matrix) -> Self {
        Self {
            k,
            sigma: 0.0,
            sampling: false,
        }
    }

    pub fn mean(&self, s: &Vector) -> Result<Vector> {
        if s.len() != self.k.ncols() {
            return Err(Error::dim(format!(
                "gain is {:?}, state has length {}",
                self.k.shape(),
                s.len()
            )));
        }
        Ok(&self.k * s)
    }

    pub fn act(&self, s: &Vector, rng: &mut RngStream) -> Result<Vector> {
        let mean = self.mean(s)?;
        if !self.sampling {
            return Ok(mean);
        }
        Ok(mean + Vector::from_vec(rng.normal_vec(self.k.nrows())) * self.sigma)
    }

    /// `∇_K log p(a | s) = (a − K s) sᵀ / σ²`.
    pub fn grad_log_likelihood(&self, s: &Vector, a: &Vector) -> Result<Matrix> {
        let residual = a - self.mean(s)?;
        Ok(residual * s.transpose() / (self.sigma * self.sigma))
    }
}

/// Log-density of `a` under `N(K s, σ² I)`:
/// `−(m/2) log(2πσ²) − ‖a − K s‖² / (2σ²)`.
pub fn gaussian_log_likelihood(
    policy: &LinearGaussianPolicy,
    s: &Vector,
    a: &Vector,
) -> Result<f64> {
    if !(policy.sigma > 0.0) {
        return Err(Error::domain(
            "log-likelihood needs a positive exploration std",
        ));
    }
    let mean = policy.mean(s)?;
    if a.len() != mean.len() {
        return Err(Error::dim(format!(
            "action has length {}, policy outputs {}",
            a.len(),
            mean.len()
        )));
    }
    let var = policy.sigma * policy.sigma;
    let m = a.len() as f64;
    Ok(
        -0.5 * m * (2.0 * std::f64::consts::PI * var).ln()
            - (a - mean).norm_squared() / (2.0 * var),
    )
}

/// Per-trajectory reward `−(Σ c_t) / T`.
pub fn trajectory_reward(traj: &Trajectory<Vector, Vector>) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::domain("reward of an empty trajectory"));
    }
    Ok(-traj.total() / traj.len() as f64)
}

/// Likelihood-ratio gradient of the linear-Gaussian policy,
/// `(1/(σ²|D|)) Σ_τ (R_τ − b) Σ_t (a_t − K s_t) s_tᵀ`,
/// with `R_τ` from [`trajectory_reward`]. Trajectories are accumulated in
/// order, each inner sum formed before it is scaled.
pub fn pg_gradient_linear(
    batches: &[Trajectory<Vector, Vector>],
    k: &Matrix,
    sigma: f64,
    baseline: f64,
) -> Result<Matrix> {
    if batches.is_empty() {
        return Err(Error::domain("policy gradient of an empty batch"));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(
            "policy gradient needs a positive exploration std",
        ));
    }
    let scale = 1.0 / (sigma * sigma);
    let count = batches.len() as f64;
    let mut grad = Matrix::zeros(k.nrows(), k.ncols());
    for traj in batches {
        let reward = trajectory_reward(traj)?;
        let mut inner = Matrix::zeros(k.nrows(), k.ncols());
        for (s, a) in traj.states.iter().zip(&traj.actions) {
            if s.len() != k.ncols() || a.len() != k.nrows() {
                return Err(Error::dim("trajectory dimensions do not match the gain"));
            }
            inner += (a - k * s) * s.transpose();
        }
        grad += inner * (scale * (reward - baseline) / count);
    }
    Ok(grad)
}

/// Hyperparameters of linear-policy gradient ascent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgLqConfig {
    pub iterations: usize,
    pub batch_size: usize,
    /// Rollout length `T`.
    pub horizon: usize,
    /// Exploration standard deviation `σ`.
    pub explore_mag: f64,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Value written into every gain entry if learning diverges to NaN.
    pub safeguard: f64,
}

impl Default for PgLqConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            batch_size: 8,
            horizon: 100,
            explore_mag: 0.1,
            step_size: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            safeguard: 10.0,
        }
    }
}

impl PgLqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.horizon == 0 {
            return Err(Error::Config(
                "batch_size and horizon must be positive".into(),
            ));
        }
        if !(self.explore_mag > 0.0) || !(self.safeguard > 0.0) {
            return Err(Error::Config(
                "explore_mag and safeguard must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Statistics of one policy-gradient iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PgIteration {
    /// Mean of the per-trajectory rewards, which becomes the next baseline.
    pub mean_reward: f64,
    pub gradient: Matrix,
}

/// Iteration-by-iteration driver for [`pg_train_lq`].
#[derive(Debug, Clone)]
pub struct PgLqTrainer {
    policy: LinearGaussianPolicy,
    adam: AdamState,
    baseline: f64,
    config: PgLqConfig,
}

impl PgLqTrainer {
    pub fn new(env: &LinearQuadraticEnv, k0: Matrix, config: PgLqConfig) -> Result<Self> {
        config.validate()?;
        if k0.shape() != (env.m(), env.n()) {
            return Err(Error::dim(format!(
                "initial gain must be {}x{}, got {:?}",
                env.m(),
                env.n(),
                k0.shape()
            )));
        }
        let adam = AdamState::with_hyperparameters(
            env.m(),
            env.n(),
            config.step_size,
            config.beta1,
            config.beta2,
            config.epsilon,
        )?;
        Ok(Self {
            policy: LinearGaussianPolicy::new(k0, config.explore_mag)?,
            adam,
            baseline: 0.0,
            config,
        })
    }

    pub fn gain(&self) -> &Matrix {
        &self.policy.k
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// Collects a batch of exploratory rollouts, forms the gradient against the
    /// previous baseline, refreshes the baseline and takes one Adam step.
    pub fn iterate(
        &mut self,
        env: &LinearQuadraticEnv,
        rng: &mut RngStream,
    ) -> Result<PgIteration> {
        let mut batch = Vec::with_capacity(self.config.batch_size);
        for _ in 0..self.config.batch_size {
            let policy = &self.policy;
            batch.push(rollout(
                env,
                |s, r| policy.act(s, r),
                self.config.horizon,
                rng,
            )?);
        }
        let gradient =
            pg_gradient_linear(&batch, &self.policy.k, self.policy.sigma, self.baseline)?;
        let rewards = batch
            .iter()
            .map(trajectory_reward)
            .collect::<Result<Vec<_>>>()?;
        let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
        self.baseline = mean_reward;
        self.apply_gradient(&gradient)?;
        Ok(PgIteration {
            mean_reward,
            gradient,
        })
    }

    /// Adds the Adam increment for `gradient` to the gain.
    pub fn apply_gradient(&mut self, gradient: &Matrix) -> Result<()> {
        let inc = self.adam.step(gradient)?;
        self.policy.k += inc;
        Ok(())
    }

    /// The learned gain, with every entry replaced by the safeguard value if
    /// any entry is NaN.
    pub fn finish(self) -> Matrix {
        if self.policy.k.iter().any(|v| v.is_nan()) {
            let (m, n) = self.policy.k.shape();
            Matrix::from_element(m, n, self.config.safeguard)
        } else {
            self.policy.k
        }
    }
}

/// Linear-policy gradient ascent with a lagged mean-reward baseline and Adam.
pub fn pg_train_lq(
    env: &LinearQuadraticEnv,
    k0: &Matrix,
    config: &PgLqConfig,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let mut trainer = PgLqTrainer::new(env, k0.clone(), config.clone())?;
    for _ in 0..config.iterations {
        trainer.iterate(env, rng)?;
    }
    Ok(trainer.finish())
}
