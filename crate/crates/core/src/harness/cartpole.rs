use crate::envs::{rollout, CartPole};
use crate::error::Result;
use crate::numerics::RngStream;
use crate::pg::SoftmaxPolicyAgent;
use crate::qlearn::{DiscreteQAgent, ReplayMemory, Transition};

use super::config::{EvalConfig, PgCartpoleConfig, QCartpoleConfig};

/// One training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub train_return: f64,
    pub loss: f64,
    /// NaN for policy gradient.
    pub epsilon: f64,
    /// Mean greedy return when an evaluation ran after this episode, else NaN.
    pub eval_mean: f64,
}

#[derive(Debug, Clone)]
pub struct CartpoleOutcome {
    pub rows: Vec<EpisodeRow>,
    /// Zero-based training episode after which the greedy evaluation passed.
    pub solved_at: Option<usize>,
    pub checkpoint: String,
}

/// Greedy evaluation; stops early once the threshold is out of reach.
/// Returns the played returns and whether their mean reached the threshold
/// over the full set of episodes.
pub fn evaluate_greedy<F>(
    env: &CartPole,
    mut policy: F,
    eval: &EvalConfig,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, bool)>
where
    F: FnMut(&[f64]) -> Result<usize>,
{
    let needed = eval.threshold * eval.episodes as f64;
    let mut returns = Vec::with_capacity(eval.episodes);
    let mut sum = 0.0;
    for i in 0..eval.episodes {
        let traj = rollout(env, |s, _| policy(&s.observation()), env.max_steps, rng)?;
        let r = traj.total();
        sum += r;
        returns.push(r);
        let remaining = (eval.episodes - i - 1) as f64;
        if sum + remaining * (env.max_steps as f64) < needed {
            return Ok((returns, false));
        }
    }
    let solved = super::check_solved_with(&returns, eval.episodes, eval.threshold).0;
    Ok((returns, solved))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Streams {
    train: RngStream,
    eval: RngStream,
    init_seed: u64,
}

fn streams(seed: u64) -> Streams {
    let root = RngStream::new(seed);
    Streams {
        train: root.fork(1),
        eval: root.fork(2),
        init_seed: root.fork(3).seed(),
    }
}

/// REINFORCE on cartpole, one update per episode.
pub fn train_pg_cartpole<F>(
    env: &CartPole,
    cfg: &PgCartpoleConfig,
    eval: &EvalConfig,
    seed: u64,
    mut on_row: F,
) -> Result<CartpoleOutcome>
where
    F: FnMut(&EpisodeRow),
{
    let mut st = streams(seed);
    let mut agent = SoftmaxPolicyAgent::new(
        CartPole::N_STATE,
        CartPole::N_ACTIONS,
        cfg.hidden,
        cfg.gamma,
        cfg.learning_rate,
        st.init_seed,
    )?;
    let mut rows = Vec::new();
    let mut solved_at = None;
    for episode in 0..cfg.episodes {
        let traj = rollout(
            env,
            |s, r| agent.sample_action(&s.observation(), r),
            env.max_steps,
            &mut st.train,
        )?;
        let obs: Vec<[f64; 4]> = traj.states.iter().map(|s| s.observation()).collect();
        let loss = if traj.len() >= 2 {
            agent.update(&obs, &traj.actions, &traj.rewards)?
        } else {
            f64::NAN
        };
        let mut row = EpisodeRow {
            episode,
            train_return: traj.total(),
            loss,
            epsilon: f64::NAN,
            eval_mean: f64::NAN,
        };
        if (episode + 1) % eval.every == 0 {
            let (returns, solved) =
                evaluate_greedy(env, |s| agent.greedy_action(s), eval, &mut st.eval)?;
            row.eval_mean = mean(&returns);
            if solved && solved_at.is_none() {
                solved_at = Some(episode);
            }
        }
        on_row(&row);
        rows.push(row);
        if solved_at.is_some() && eval.stop_when_solved {
            break;
        }
    }
    Ok(CartpoleOutcome {
        rows,
        solved_at,
        checkpoint: agent.network.to_checkpoint(),
    })
}

/// Q-learning on cartpole. Without replay the network takes one TD step on
/// each finished episode; with replay every environment step is stored in the
/// memory and followed by one replay step on a sampled batch.
pub fn train_q_cartpole<F>(
    env: &CartPole,
    cfg: &QCartpoleConfig,
    eval: &EvalConfig,
    replay: bool,
    seed: u64,
    mut on_row: F,
) -> Result<CartpoleOutcome>
where
    F: FnMut(&EpisodeRow),
{
    let mut st = streams(seed);
    let mut agent = DiscreteQAgent::new(
        CartPole::N_STATE,
        CartPole::N_ACTIONS,
        cfg.hidden,
        cfg.gamma,
        cfg.epsilon,
        cfg.learning_rate,
        st.init_seed,
    )?;
    let mut memory = ReplayMemory::new(cfg.memory_capacity)?;
    let mut rows = Vec::new();
    let mut solved_at = None;
    for episode in 0..cfg.episodes {
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        let (ret, loss) = if replay {
            let mut state = crate::envs::Environment::reset(env, &mut st.train);
            let mut ret = 0.0;
            loop {
                let obs = state.observation();
                let action = agent.epsilon_greedy_action(&obs, &mut st.train)?;
                let (next, reward, done) = env.advance(&state, action)?;
                ret += reward;
                memory.remember(Transition {
                    state: obs.to_vec(),
                    action,
                    reward,
                    next_state: next.observation().to_vec(),
                    done,
                });
                let batch = memory.sample(cfg.batch_size, &mut st.train)?;
                loss_sum += agent.td_update(
                    &batch.states,
                    &batch.actions,
                    &batch.rewards,
                    &batch.next_states,
                    &batch.dones,
                )?;
                loss_count += 1;
                agent.decay_epsilon(cfg.epsilon_decay, cfg.epsilon_floor);
                if done {
                    break;
                }
                state = next;
            }
            (ret, loss_sum / loss_count as f64)
        } else {
            let traj = rollout(
                env,
                |s, r| agent.epsilon_greedy_action(&s.observation(), r),
                env.max_steps,
                &mut st.train,
            )?;
            let obs: Vec<[f64; 4]> = traj.states.iter().map(|s| s.observation()).collect();
            let next: Vec<[f64; 4]> = traj.next_states.iter().map(|s| s.observation()).collect();
            let loss = agent.td_update(&obs, &traj.actions, &traj.rewards, &next, &traj.dones)?;
            (traj.total(), loss)
        };
        let mut row = EpisodeRow {
            episode,
            train_return: ret,
            loss,
            epsilon: agent.epsilon(),
            eval_mean: f64::NAN,
        };
        if (episode + 1) % eval.every == 0 {
            let (returns, solved) =
                evaluate_greedy(env, |s| agent.greedy_action(s), eval, &mut st.eval)?;
            row.eval_mean = mean(&returns);
            if solved && solved_at.is_none() {
                solved_at = Some(episode);
            }
        }
        on_row(&row);
        rows.push(row);
        if solved_at.is_some() && eval.stop_when_solved {
            break;
        }
    }
    Ok(CartpoleOutcome {
        rows,
        solved_at,
        checkpoint: agent.network.to_checkpoint(),
    })
}
