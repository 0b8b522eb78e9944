use serde::{Deserialize, Serialize};

use crate::envs::{rollout, LinearQuadraticEnv, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{
    condition_number, instrumental_variable_regression, mat_from_vecs, sym_dim, vecs, vecv, Matrix,
    RngStream, Vector, MAX_CONDITION,
};

/// `Q(s, a) = zᵀ G z` with `z = [s; a]` and
/// `G = [[g_ss, g_sa], [g_saᵀ, g_aa]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticQ {
    g: Matrix,
    n: usize,
}

impl QuadraticQ {
    pub fn new(g: Matrix, n: usize) -> Result<Self> {
        if g.nrows() != g.ncols() || n == 0 || n >= g.nrows() {
            return Err(Error::dim(format!(
                "kernel is {}x{}, state width {n}",
                g.nrows(),
                g.ncols()
            )));
        }
        // vecs rejects asymmetric input
        let g = mat_from_vecs(&vecs(&g)?, g.nrows())?;
        Ok(Self { g, n })
    }

    pub fn kernel(&self) -> &Matrix {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.g.nrows() - self.n
    }

    pub fn g_ss(&self) -> Matrix {
        self.g.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn g_sa(&self) -> Matrix {
        self.g.view((0, self.n), (self.n, self.m())).into_owned()
    }

    pub fn g_aa(&self) -> Matrix {
        self.g
            .view((self.n, self.n), (self.m(), self.m()))
            .into_owned()
    }

    pub fn value(&self, s: &Vector, a: &Vector) -> Result<f64> {
        if s.len() != self.n || a.len() != self.m() {
            return Err(Error::dim(format!(
                "Q takes a state of width {} and an action of width {}",
                self.n,
                self.m()
            )));
        }
        let z = Vector::from_iterator(self.g.nrows(), s.iter().chain(a.iter()).copied());
        Ok(z.dot(&(&self.g * &z)))
    }

    /// Greedy gain `K = −g_aa⁻¹ g_saᵀ`.
    pub fn policy_improve(&self) -> Result<Matrix> {
        let g_aa = self.g_aa();
        let cond = condition_number(&g_aa);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::singular("policy improvement: g_aa", cond));
        }
        let sol = g_aa
            .lu()
            .solve(&self.g_sa().transpose())
            .ok_or_else(|| Error::singular("policy improvement: g_aa", cond))?;
        Ok(-sol)
    }

    /// Value kernel of the gain `K`: `g_ss + g_sa K + Kᵀ g_saᵀ + Kᵀ g_aa K`.
    pub fn g_to_p(&self, k: &Matrix) -> Result<Matrix> {
        if k.shape() != (self.m(), self.n) {
            return Err(Error::dim(format!(
                "gain must be {}x{}, got {:?}",
                self.m(),
                self.n,
                k.shape()
            )));
        }
        let g_sa = self.g_sa();
        let cross = &g_sa * k;
        let p = self.g_ss() + &cross + cross.transpose() + k.transpose() * self.g_aa() * k;
        Ok((&p + p.transpose()) * 0.5)
    }
}

/// `a = K s + stddev · ξ`, `ξ ~ N(0, I)`.
pub fn gaussian_exploration_action(
    k: &Matrix,
    s: &Vector,
    stddev: f64,
    rng: &mut RngStream,
) -> Result<Vector> {
    if !(stddev >= 0.0) {
        return Err(Error::domain(format!(
            "exploration std {stddev} is negative"
        )));
    }
    if s.len() != k.ncols() {
        return Err(Error::dim(format!(
            "gain is {:?}, state has length {}",
            k.shape(),
            s.len()
        )));
    }
    let noise = Vector::from_vec(rng.normal_vec(k.nrows()));
    Ok(k * s + noise * stddev)
}

fn feature(s: &Vector, a: &Vector) -> Result<Vec<f64>> {
    let z: Vec<f64> = s.iter().chain(a.iter()).copied().collect();
    Ok(vecv(&z)?.into_vec())
}

/// LSTD estimate of the Q-kernel of the gain `K` from one trajectory.
///
/// Regressors are `Ψ_t − γ Ψ'_t` with `Ψ_t = vecv([s_t; a_t])` and
/// `Ψ'_t = vecv([s'_t; K s'_t])`; instruments are `Ψ_t`. With `gamma == 1`
/// the targets are `c_t − λ` (average cost); with `gamma < 1` they are `c_t`
/// and `lambda` is ignored.
pub fn lstd_evaluate(
    traj: &Trajectory<Vector, Vector>,
    k: &Matrix,
    lambda: f64,
    gamma: f64,
) -> Result<QuadraticQ> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::domain(format!("discount {gamma} outside [0, 1]")));
    }
    let (m, n) = k.shape();
    let p = sym_dim(n + m);
    let t = traj.len();
    if t < 3 * p {
        return Err(Error::domain(format!(
            "LSTD needs at least {} samples for {p} features, got {t}",
            3 * p
        )));
    }
    let mut x = Matrix::zeros(t, p);
    let mut z = Matrix::zeros(t, p);
    let mut y = Vector::zeros(t);
    let average = gamma == 1.0;
    for i in 0..t {
        let (s, a, s1) = (&traj.states[i], &traj.actions[i], &traj.next_states[i]);
        if s.len() != n || s1.len() != n || a.len() != m {
            return Err(Error::dim(format!(
                "sample {i} does not match a {m}x{n} gain"
            )));
        }
        let psi = feature(s, a)?;
        let psi_next = feature(s1, &(k * s1))?;
        for j in 0..p {
            x[(i, j)] = psi[j] - gamma * psi_next[j];
            z[(i, j)] = psi[j];
        }
        y[i] = if average {
            traj.rewards[i] - lambda
        } else {
            traj.rewards[i]
        };
    }
    let theta = instrumental_variable_regression(&x, &y, &z).map_err(|e| match e {
        Error::Singular { condition, .. } => Error::singular(
            "LSTD normal matrix; increase the exploration std or the rollout length",
            condition,
        ),
        other => other,
    })?;
    let sv = crate::numerics::SymVec::new(n + m, theta.iter().copied().collect())?;
    QuadraticQ::new(mat_from_vecs(&sv, n + m)?, n)
}

/// Settings of LSTD policy iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqQlConfig {
    pub iterations: usize,
    /// Rollout length `T`.
    pub horizon: usize,
    pub explore_mag: f64,
}

impl Default for LqQlConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            horizon: 2000,
            explore_mag: 1.0,
        }
    }
}

/// State after one policy iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct QlIteration {
    pub iteration: usize,
    /// Average cost of the gain that was evaluated.
    pub lambda: f64,
    /// Improved gain.
    pub k: Matrix,
    pub p: Matrix,
}

/// LSTD policy iteration. Returns `(P, K)` of the last iteration; all zeros
/// when the current gain stops being stabilizing, and `(0, K0)` when
/// `iterations == 0`.
pub fn q_learning_lq(
    env: &LinearQuadraticEnv,
    k0: &Matrix,
    config: &LqQlConfig,
    rng: &mut RngStream,
) -> Result<(Matrix, Matrix)> {
    q_learning_lq_traced(env, k0, config, rng, |_| {})
}

/// [`q_learning_lq`] with a callback after every completed iteration.
pub fn q_learning_lq_traced<F>(
    env: &LinearQuadraticEnv,
    k0: &Matrix,
    config: &LqQlConfig,
    rng: &mut RngStream,
    mut on_iteration: F,
) -> Result<(Matrix, Matrix)>
where
    F: FnMut(&QlIteration),
{
    let (n, m) = (env.n(), env.m());
    if k0.shape() != (m, n) {
        return Err(Error::dim(format!(
            "initial gain must be {m}x{n}, got {:?}",
            k0.shape()
        )));
    }
    if config.horizon == 0 || !(config.explore_mag >= 0.0) {
        return Err(Error::Config(
            "horizon must be positive and explore_mag non-negative".into(),
        ));
    }
    let mut k = k0.clone();
    let mut p = Matrix::zeros(n, n);
    for iteration in 0..config.iterations {
        if !env.is_stable(&k)? {
            log::warn!("gain became destabilizing at iteration {iteration}");
            return Ok((Matrix::zeros(n, n), Matrix::zeros(m, n)));
        }
        let greedy = rollout(env, |s, _| Ok(&k * s), config.horizon, rng)?;
        let lambda = greedy.total() / config.horizon as f64;
        let data = rollout(
            env,
            |s, r| gaussian_exploration_action(&k, s, config.explore_mag, r),
            config.horizon,
            rng,
        )?;
        let q = lstd_evaluate(&data, &k, lambda, 1.0)?;
        k = q.policy_improve()?;
        p = q.g_to_p(&k)?;
        on_iteration(&QlIteration {
            iteration,
            lambda,
            k: k.clone(),
            p: p.clone(),
        });
    }
    Ok((p, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{solve_dare, solve_policy_lyapunov};
    use proptest::prelude::*;

    fn m(r: usize, c: usize, x: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, x)
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    /// `blockdiag(Q, R) + [A B]ᵀ P_K [A B]`.
    fn oracle_kernel(env: &LinearQuadraticEnv, k: &Matrix) -> Matrix {
        let (n, mm) = (env.n(), env.m());
        let pk = solve_policy_lyapunov(env.a(), env.b(), env.q(), env.r(), k).unwrap();
        let mut ab = Matrix::zeros(n, n + mm);
        ab.view_mut((0, 0), (n, n)).copy_from(env.a());
        ab.view_mut((0, n), (n, mm)).copy_from(env.b());
        let mut g = ab.transpose() * pk * &ab;
        let mut qv = g.view_mut((0, 0), (n, n));
        qv += env.q();
        let mut rv = g.view_mut((n, n), (mm, mm));
        rv += env.r();
        g
    }

    fn random_spd(rng: &mut RngStream, d: usize) -> Matrix {
        let a = Matrix::from_fn(d, d, |_, _| rng.standard_normal());
        &a * a.transpose() + Matrix::identity(d, d) * 0.5
    }

    #[test]
    fn values_by_hand() {
        let q = QuadraticQ::new(Matrix::identity(2, 2), 1).unwrap();
        assert_eq!(q.value(&v(&[1.0]), &v(&[1.0])).unwrap(), 2.0);
        let q = QuadraticQ::new(m(2, 2, &[1.0, 2.0, 2.0, 3.0]), 1).unwrap();
        assert_eq!(q.value(&v(&[1.0]), &v(&[1.0])).unwrap(), 8.0);
        assert!(q.value(&v(&[1.0, 0.0]), &v(&[1.0])).is_err());
    }

    #[test]
    fn improvement_by_hand() {
        let q = QuadraticQ::new(m(2, 2, &[1.0, 1.0, 1.0, 2.0]), 1).unwrap();
        assert_eq!(q.policy_improve().unwrap()[(0, 0)], -0.5);
        let q =
            QuadraticQ::new(m(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 4.0]), 2).unwrap();
        assert_eq!(q.policy_improve().unwrap(), Matrix::zeros(1, 2));
        let sing = QuadraticQ::new(m(2, 2, &[1.0, 1.0, 1.0, 0.0]), 1).unwrap();
        assert!(matches!(sing.policy_improve(), Err(Error::Singular { .. })));
    }

    #[test]
    fn oracle_kernel_recovers_riccati_solution() {
        for env in [
            LinearQuadraticEnv::scalar_benchmark(),
            LinearQuadraticEnv::two_state_benchmark(),
        ] {
            let dare = solve_dare(env.a(), env.b(), env.q(), env.r()).unwrap();
            let q = QuadraticQ::new(oracle_kernel(&env, &dare.k), env.n()).unwrap();
            assert!((q.policy_improve().unwrap() - &dare.k).amax() < 1e-9);
            assert!((q.g_to_p(&dare.k).unwrap() - &dare.p).amax() < 1e-8);
            assert_eq!(
                q.g_to_p(&Matrix::zeros(env.m(), env.n())).unwrap(),
                q.g_ss()
            );
        }
    }

    #[test]
    fn oracle_policy_iteration_is_monotone() {
        let env = LinearQuadraticEnv::two_state_benchmark();
        let mut k = Matrix::zeros(1, 2);
        for _ in 0..5 {
            let pk = solve_policy_lyapunov(env.a(), env.b(), env.q(), env.r(), &k).unwrap();
            let next = QuadraticQ::new(oracle_kernel(&env, &k), 2)
                .unwrap()
                .policy_improve()
                .unwrap();
            assert!(env.is_stable(&next).unwrap());
            let pn = solve_policy_lyapunov(env.a(), env.b(), env.q(), env.r(), &next).unwrap();
            let gap = (&pk - &pn).symmetric_eigenvalues().min();
            assert!(gap >= -1e-8, "P_K' exceeds P_K by {gap}");
            k = next;
        }
    }

    #[test]
    fn exploration_noise() {
        let k = m(1, 2, &[0.5, -1.0]);
        let s = v(&[2.0, 1.0]);
        let mut rng = RngStream::new(0);
        assert_eq!(
            gaussian_exploration_action(&k, &s, 0.0, &mut rng).unwrap(),
            &k * &s
        );
        let n = 100_000;
        let mut sq = 0.0;
        for _ in 0..n {
            let a = gaussian_exploration_action(&k, &s, 0.7, &mut rng).unwrap();
            sq += (a[0] - (&k * &s)[0]).powi(2);
        }
        let sd = (sq / n as f64).sqrt();
        assert!((sd - 0.7).abs() < 0.02 * 0.7);
        let a1 = gaussian_exploration_action(&k, &s, 1.0, &mut RngStream::new(4)).unwrap();
        let a2 = gaussian_exploration_action(&k, &s, 1.0, &mut RngStream::new(4)).unwrap();
        assert_eq!(a1, a2);
        assert!(gaussian_exploration_action(&k, &s, -1.0, &mut rng).is_err());
    }

    fn synthetic(
        rng: &mut RngStream,
        g0: &Matrix,
        k: &Matrix,
        t: usize,
        dup: bool,
    ) -> Trajectory<Vector, Vector> {
        let (mm, n) = k.shape();
        let sv = vecs(g0).unwrap();
        let mut traj = Trajectory::new();
        for _ in 0..t {
            let s = Vector::from_vec(rng.normal_vec(n));
            let a = Vector::from_vec(rng.normal_vec(mm));
            let s1 = Vector::from_vec(rng.normal_vec(n));
            let psi = vecv(&s.iter().chain(a.iter()).copied().collect::<Vec<_>>()).unwrap();
            let ks1 = k * &s1;
            let psi1 = vecv(&s1.iter().chain(ks1.iter()).copied().collect::<Vec<_>>()).unwrap();
            let target: f64 = sv
                .as_slice()
                .iter()
                .zip(psi.as_slice().iter().zip(psi1.as_slice()))
                .map(|(g, (p, q))| g * (p - q))
                .sum();
            let reps = if dup { 2 } else { 1 };
            for _ in 0..reps {
                traj.push(s.clone(), a.clone(), target, s1.clone(), false);
            }
        }
        traj
    }

    #[test]
    fn exact_regression_data_is_recovered() {
        let mut rng = RngStream::new(21);
        let g0 = random_spd(&mut rng, 3);
        let k = m(1, 2, &[0.3, -0.2]);
        let traj = synthetic(&mut rng, &g0, &k, 60, false);
        let q = lstd_evaluate(&traj, &k, 0.0, 1.0).unwrap();
        assert!((q.kernel() - &g0).amax() < 1e-8);
    }

    #[test]
    fn duplicating_samples_changes_nothing() {
        let mut rng = RngStream::new(22);
        let g0 = random_spd(&mut rng, 2);
        let k = m(1, 1, &[0.1]);
        let mut noisy = synthetic(&mut rng, &g0, &k, 40, false);
        for r in noisy.rewards.iter_mut() {
            *r += 0.1 * rng.standard_normal();
        }
        let mut doubled = Trajectory::new();
        for i in 0..noisy.len() {
            for _ in 0..2 {
                doubled.push(
                    noisy.states[i].clone(),
                    noisy.actions[i].clone(),
                    noisy.rewards[i],
                    noisy.next_states[i].clone(),
                    false,
                );
            }
        }
        let a = lstd_evaluate(&noisy, &k, 0.3, 1.0).unwrap();
        let b = lstd_evaluate(&doubled, &k, 0.3, 1.0).unwrap();
        assert!((a.kernel() - b.kernel()).amax() < 1e-9);
    }

    #[test]
    fn short_or_unexcited_data_is_rejected() {
        let env = LinearQuadraticEnv::scalar_benchmark();
        let k = m(1, 1, &[-0.3]);
        let mut rng = RngStream::new(1);
        let short = rollout(
            &env,
            |s, r| gaussian_exploration_action(&k, s, 1.0, r),
            5,
            &mut rng,
        )
        .unwrap();
        assert!(matches!(
            lstd_evaluate(&short, &k, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
        let flat = rollout(&env, |s, _| Ok(&k * s), 200, &mut rng).unwrap();
        assert!(matches!(
            lstd_evaluate(&flat, &k, 0.0, 1.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn discounted_mode_ignores_lambda() {
        let env = LinearQuadraticEnv::scalar_benchmark();
        let k = m(1, 1, &[-0.3]);
        let mut rng = RngStream::new(2);
        let data = rollout(
            &env,
            |s, r| gaussian_exploration_action(&k, s, 1.0, r),
            300,
            &mut rng,
        )
        .unwrap();
        let a = lstd_evaluate(&data, &k, 0.0, 0.9).unwrap();
        let b = lstd_evaluate(&data, &k, 123.0, 0.9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scalar_lstd_close_to_oracle() {
        let env = LinearQuadraticEnv::scalar_benchmark();
        let k = m(1, 1, &[-0.3]);
        let g_star = oracle_kernel(&env, &k);
        let mut rng = RngStream::new(11);
        let greedy = rollout(&env, |s, _| Ok(&k * s), 5000, &mut rng).unwrap();
        let lambda = greedy.total() / 5000.0;
        let data = rollout(
            &env,
            |s, r| gaussian_exploration_action(&k, s, 1.0, r),
            5000,
            &mut rng,
        )
        .unwrap();
        let q = lstd_evaluate(&data, &k, lambda, 1.0).unwrap();
        let rel = (q.kernel() - &g_star).norm() / g_star.norm();
        assert!(rel < 0.05, "relative error {rel}");
    }

    #[test]
    fn unstable_gain_returns_zeros() {
        let env = LinearQuadraticEnv::scalar_benchmark();
        let (p, k) = q_learning_lq(
            &env,
            &m(1, 1, &[5.0]),
            &LqQlConfig::default(),
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(p, Matrix::zeros(1, 1));
        assert_eq!(k, Matrix::zeros(1, 1));
    }

    #[test]
    fn zero_iterations_keep_initial_gain() {
        let env = LinearQuadraticEnv::two_state_benchmark();
        let k0 = m(1, 2, &[-0.1, -0.2]);
        let cfg = LqQlConfig {
            iterations: 0,
            ..LqQlConfig::default()
        };
        let (p, k) = q_learning_lq(&env, &k0, &cfg, &mut RngStream::new(0)).unwrap();
        assert_eq!(p, Matrix::zeros(2, 2));
        assert_eq!(k, k0);
    }

    #[test]
    fn two_state_benchmark_approaches_riccati_gain() {
        let env = LinearQuadraticEnv::two_state_benchmark();
        let dare = solve_dare(env.a(), env.b(), env.q(), env.r()).unwrap();
        let cfg = LqQlConfig {
            iterations: 6,
            horizon: 100_000,
            explore_mag: 1.0,
        };
        let mut gaps = Vec::new();
        let (p, k) = q_learning_lq_traced(
            &env,
            &Matrix::zeros(1, 2),
            &cfg,
            &mut RngStream::new(7),
            |it| {
                assert_eq!(it.iteration, gaps.len());
                gaps.push((&it.k - &dare.k).norm());
            },
        )
        .unwrap();
        assert_eq!(gaps.len(), 6);
        assert!(gaps[5] < gaps[0]);
        assert!((k - &dare.k).norm() <= 0.05, "gaps {gaps:?}");
        assert!((p - &dare.p).norm() / dare.p.norm() <= 0.05);
    }

    proptest! {
        #[test]
        fn value_matches_feature_identity(seed in any::<u64>(), n in 1usize..4, mm in 1usize..3) {
            let mut rng = RngStream::new(seed);
            let d = n + mm;
            let a = Matrix::from_fn(d, d, |_, _| rng.standard_normal());
            let g = (&a + a.transpose()) * 0.5;
            let q = QuadraticQ::new(g.clone(), n).unwrap();
            let s = Vector::from_vec(rng.normal_vec(n));
            let act = Vector::from_vec(rng.normal_vec(mm));
            let z: Vec<f64> = s.iter().chain(act.iter()).copied().collect();
            let lhs = q.value(&s, &act).unwrap();
            let rhs = vecs(&g).unwrap().dot(&vecv(&z).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }

        #[test]
        fn greedy_gain_minimizes_q(seed in any::<u64>(), n in 1usize..4, mm in 1usize..3) {
            let mut rng = RngStream::new(seed);
            let g = random_spd(&mut rng, n + mm);
            let q = QuadraticQ::new(g, n).unwrap();
            let k = q.policy_improve().unwrap();
            let s = Vector::from_vec(rng.normal_vec(n));
            let best = &k * &s;
            let q_best = q.value(&s, &best).unwrap();
            for step in [-1e-2, -1e-4, 1e-4, 1e-2] {
                for j in 0..mm {
                    let mut a = best.clone();
                    a[j] += step;
                    prop_assert!(q.value(&s, &a).unwrap() >= q_best - 1e-12 * q_best.abs().max(1.0));
                }
            }
            let p = q.g_to_p(&k).unwrap();
            let direct = s.dot(&(&p * &s));
            prop_assert!((direct - q_best).abs() <= 1e-10 * q_best.abs().max(1.0));
        }
    }
}
