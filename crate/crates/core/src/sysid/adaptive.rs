use crate::envs::{LinearQuadraticEnv, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{least_squares_multi, solve_dare, Matrix, RngStream, Vector};

/// Least-squares estimate of `(A, B)` from the transitions `s' = A s + B a`.
pub fn identify_linear_ss(traj: &Trajectory<Vector, Vector>) -> Result<(Matrix, Matrix)> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::domain("cannot identify a model from an empty trajectory"))?;
    let n = first.len();
    let m = traj.actions[0].len();
    let p = n + m;
    if traj.len() < 2 * p {
        return Err(Error::domain(format!(
            "identification of a {n}-state, {m}-input model needs at least {} samples, got {}",
            2 * p,
            traj.len()
        )));
    }
    let mut x = Matrix::zeros(traj.len(), p);
    let mut y = Matrix::zeros(traj.len(), n);
    for (i, ((s, a), s1)) in traj
        .states
        .iter()
        .zip(&traj.actions)
        .zip(&traj.next_states)
        .enumerate()
    {
        if s.len() != n || a.len() != m || s1.len() != n {
            return Err(Error::dim(format!("sample {i} has inconsistent widths")));
        }
        for j in 0..n {
            x[(i, j)] = s[j];
            y[(i, j)] = s1[j];
        }
        for j in 0..m {
            x[(i, n + j)] = a[j];
        }
    }
    // rows of the solution are [A B]ᵀ
    let theta = least_squares_multi(&x, &y)?.transpose();
    Ok((
        theta.view((0, 0), (n, n)).into_owned(),
        theta.view((0, n), (n, m)).into_owned(),
    ))
}

/// Output of [`adaptive_lq_control`].
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub trajectory: Trajectory<Vector, Vector>,
    /// The initial zero gain followed by the gain in force after each replan.
    pub gains: Vec<Matrix>,
    /// Step count at which each entry of `gains` took effect.
    pub replan_steps: Vec<usize>,
}

/// Certainty-equivalence control: act with `a = K s + σ ξ` (pure excitation
/// during the first `10 (n + m)` steps), and every `replan_every` steps
/// re-identify `(A, B)` from all data so far and set `K` from the Riccati
/// equation of the estimate.
pub fn adaptive_lq_control(
    env: &LinearQuadraticEnv,
    horizon: usize,
    excitation_std: f64,
    replan_every: usize,
    rng: &mut RngStream,
) -> Result<AdaptiveRun> {
    let (n, m) = (env.n(), env.m());
    let window = 10 * (n + m);
    if horizon < window {
        return Err(Error::domain(format!(
            "horizon {horizon} is shorter than the excitation window {window}"
        )));
    }
    if replan_every == 0 || !(excitation_std >= 0.0) {
        return Err(Error::Config(
            "replan_every must be positive and excitation_std non-negative".into(),
        ));
    }
    let mut k = Matrix::zeros(m, n);
    let mut gains = vec![k.clone()];
    let mut replan_steps = vec![0];
    let mut traj = Trajectory::new();
    let mut s = Vector::from_vec(rng.normal_vec(n)) * env.init_std;
    for t in 0..horizon {
        let noise = Vector::from_vec(rng.normal_vec(m)) * excitation_std;
        let a = if t < window { noise } else { &k * &s + noise };
        let (next, cost) = env.transition(&s, &a, rng)?;
        traj.push(s, a, cost, next.clone(), false);
        s = next;
        let count = t + 1;
        if count % replan_every == 0 {
            match identify_linear_ss(&traj)
                .and_then(|(a_hat, b_hat)| solve_dare(&a_hat, &b_hat, env.q(), env.r()))
            {
                Ok(sol) => k = sol.k,
                Err(e) => log::info!("replan at step {count} kept the previous gain: {e}"),
            }
            gains.push(k.clone());
            replan_steps.push(count);
        }
    }
    Ok(AdaptiveRun {
        trajectory: traj,
        gains,
        replan_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::rollout;

    fn noiseless(env: &LinearQuadraticEnv) -> LinearQuadraticEnv {
        env.with_noise(Matrix::zeros(env.n(), env.n())).unwrap()
    }

    #[test]
    fn noiseless_identification_is_exact() {
        let env = noiseless(&LinearQuadraticEnv::two_state_benchmark());
        let mut rng = RngStream::new(3);
        let traj = rollout(
            &env,
            |_, r| Ok(Vector::from_vec(r.normal_vec(1))),
            40,
            &mut rng,
        )
        .unwrap();
        let (a, b) = identify_linear_ss(&traj).unwrap();
        assert!((a - env.a()).amax() < 1e-10);
        assert!((b - env.b()).amax() < 1e-10);
    }

    #[test]
    fn noisy_identification_is_consistent() {
        let env = LinearQuadraticEnv::two_state_benchmark();
        let mut rng = RngStream::new(4);
        let traj = rollout(
            &env,
            |_, r| Ok(Vector::from_vec(r.normal_vec(1))),
            500,
            &mut rng,
        )
        .unwrap();
        let (a, _) = identify_linear_ss(&traj).unwrap();
        assert!((a - env.a()).norm() <= 0.1);
    }

    #[test]
    fn unexcited_input_is_unidentifiable() {
        let env = LinearQuadraticEnv::two_state_benchmark();
        let mut rng = RngStream::new(5);
        let traj = rollout(&env, |_, _| Ok(Vector::zeros(1)), 200, &mut rng).unwrap();
        assert!(matches!(
            identify_linear_ss(&traj),
            Err(Error::Singular { .. })
        ));
        let short = rollout(&env, |_, _| Ok(Vector::zeros(1)), 5, &mut rng).unwrap();
        assert!(matches!(identify_linear_ss(&short), Err(Error::Domain(_))));
    }

    #[test]
    fn noiseless_loop_hits_riccati_gain_at_first_replan() {
        let env = noiseless(&LinearQuadraticEnv::two_state_benchmark());
        let star = solve_dare(env.a(), env.b(), env.q(), env.r()).unwrap();
        let run = adaptive_lq_control(&env, 300, 1.0, 50, &mut RngStream::new(6)).unwrap();
        assert_eq!(run.gains.len(), 7);
        assert_eq!(run.replan_steps, vec![0, 50, 100, 150, 200, 250, 300]);
        for k in &run.gains[1..] {
            assert!((k - &star.k).amax() < 1e-8);
        }
    }

    #[test]
    fn long_replan_interval_keeps_initial_gain() {
        let env = LinearQuadraticEnv::scalar_benchmark();
        let run = adaptive_lq_control(&env, 100, 1.0, 500, &mut RngStream::new(0)).unwrap();
        assert_eq!(run.gains, vec![Matrix::zeros(1, 1)]);
        assert_eq!(run.trajectory.len(), 100);
        assert!(adaptive_lq_control(&env, 10, 1.0, 5, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn noisy_benchmark_converges() {
        let env = LinearQuadraticEnv::two_state_benchmark();
        let star = solve_dare(env.a(), env.b(), env.q(), env.r()).unwrap();
        let run = adaptive_lq_control(&env, 2000, 10.0, 100, &mut RngStream::new(8)).unwrap();
        let last = run.gains.last().unwrap();
        assert!((last - &star.k).norm() <= 5e-2, "{last}");
    }
}
