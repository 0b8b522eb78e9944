use std::fmt::Write as _;
use std::time::Instant;

use serde_json::json;

use crate::envs::{rollout, LinearQuadraticEnv, TabularMdp};
use crate::error::{Error, Result};
use crate::numerics::{solve_dare, Matrix, RngStream, Vector};
use crate::pg::PgLqTrainer;
use crate::qlearn::q_learning_lq_traced;
use crate::sysid::{adaptive_lq_control, identify_linear_ss};

use super::cartpole::{train_pg_cartpole, train_q_cartpole, CartpoleOutcome};
use super::config::{matrix_from_rows, matrix_to_rows, ExperimentConfig, ExperimentName, LqSystem};
use super::metrics::{float, gain_gap, int, RunRecord};

/// Runs the configured experiment. Deterministic in `config.seed`; only
/// `duration_secs` varies between runs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started = Instant::now();
    let mut record = match config.experiment {
        ExperimentName::PgCartpole => pg_cartpole(config),
        ExperimentName::QCartpole => q_cartpole(config, false),
        ExperimentName::ReplayQCartpole => q_cartpole(config, true),
        ExperimentName::PgLq => pg_lq(config),
        ExperimentName::QLq => q_lq(config),
        ExperimentName::SysidLq => sysid_lq(config),
        ExperimentName::AdaptiveLq => adaptive_lq(config),
        ExperimentName::MdpDemo => mdp_demo(config),
    }
    .map_err(|e| with_context(config.experiment, e))?;
    record.duration_secs = started.elapsed().as_secs_f64();
    Ok(record)
}

fn with_context(name: ExperimentName, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{name}: {msg}")),
        Error::Domain(msg) => Error::Domain(format!("{name}: {msg}")),
        Error::Dimension(msg) => Error::Dimension(format!("{name}: {msg}")),
        Error::Singular { context, condition } => Error::Singular {
            context: format!("{name}: {context}"),
            condition,
        },
        other => other,
    }
}

fn finish_cartpole(record: &mut RunRecord, out: CartpoleOutcome) {
    record.set("solved", out.solved_at.is_some());
    record.set("solved_at_episode", out.solved_at.map(|e| e as u64));
    record.set("episodes_run", out.rows.len() as u64);
    let best = out
        .rows
        .iter()
        .map(|r| r.eval_mean)
        .filter(|v| !v.is_nan())
        .fold(f64::NAN, f64::max);
    record.set(
        "best_eval_mean",
        if best.is_nan() {
            json!(null)
        } else {
            json!(best)
        },
    );
    record
        .artifacts
        .push(("network.ckpt".into(), out.checkpoint));
}

fn pg_cartpole(config: &ExperimentConfig) -> Result<RunRecord> {
    let mut record = RunRecord::new(
        config,
        vec![
            int("episode"),
            float("return"),
            float("loss"),
            float("eval_mean"),
        ],
    );
    let mut rows = Vec::new();
    let out = train_pg_cartpole(
        &config.cartpole,
        &config.pg_cartpole,
        &config.eval,
        config.seed,
        |r| {
            rows.push(vec![r.episode as f64, r.train_return, r.loss, r.eval_mean]);
        },
    )?;
    rows.into_iter().for_each(|r| record.push(r));
    finish_cartpole(&mut record, out);
    Ok(record)
}

fn q_cartpole(config: &ExperimentConfig, replay: bool) -> Result<RunRecord> {
    let mut record = RunRecord::new(
        config,
        vec![
            int("episode"),
            float("return"),
            float("loss"),
            float("epsilon"),
            float("eval_mean"),
        ],
    );
    let mut rows = Vec::new();
    let out = train_q_cartpole(
        &config.cartpole,
        &config.q_cartpole,
        &config.eval,
        replay,
        config.seed,
        |r| {
            rows.push(vec![
                r.episode as f64,
                r.train_return,
                r.loss,
                r.epsilon,
                r.eval_mean,
            ])
        },
    )?;
    rows.into_iter().for_each(|r| record.push(r));
    finish_cartpole(&mut record, out);
    Ok(record)
}

fn lq_env(config: &ExperimentConfig, default: LqSystem) -> Result<LinearQuadraticEnv> {
    let mut env = config.lq.system.as_ref().unwrap_or(&default).build()?;
    env.init_std = config.lq.init_std;
    Ok(env)
}

fn lq_k0(config: &ExperimentConfig, env: &LinearQuadraticEnv) -> Result<Matrix> {
    match &config.lq.k0 {
        None => Ok(Matrix::zeros(env.m(), env.n())),
        Some(rows) => {
            let k = matrix_from_rows(rows, "lq.k0")?;
            if k.shape() != (env.m(), env.n()) {
                return Err(Error::Config(format!(
                    "lq.k0 must be {}x{}",
                    env.m(),
                    env.n()
                )));
            }
            Ok(k)
        }
    }
}

fn riccati_gain(env: &LinearQuadraticEnv) -> Result<Matrix> {
    Ok(solve_dare(env.a(), env.b(), env.q(), env.r())?.k)
}

fn pg_lq(config: &ExperimentConfig) -> Result<RunRecord> {
    let env = lq_env(config, LqSystem::Scalar)?;
    let k0 = lq_k0(config, &env)?;
    let k_star = riccati_gain(&env)?;
    let mut record = RunRecord::new(
        config,
        vec![int("iteration"), float("mean_reward"), float("gain_gap")],
    );
    let mut rng = RngStream::new(config.seed);
    let mut trainer = PgLqTrainer::new(&env, k0.clone(), config.pg_lq.clone())?;
    for iteration in 0..config.pg_lq.iterations {
        let it = trainer.iterate(&env, &mut rng)?;
        let gap = gain_gap(trainer.gain(), &k_star).unwrap_or(f64::NAN);
        record.push(vec![iteration as f64, it.mean_reward, gap]);
    }
    let k = trainer.finish();
    record.set("initial_gain_gap", gain_gap(&k0, &k_star)?);
    record.set("final_gain_gap", gain_gap(&k, &k_star)?);
    record.set("gain", matrix_to_rows(&k));
    record.set("riccati_gain", matrix_to_rows(&k_star));
    Ok(record)
}

fn q_lq(config: &ExperimentConfig) -> Result<RunRecord> {
    let env = lq_env(config, LqSystem::TwoState)?;
    let k0 = lq_k0(config, &env)?;
    let k_star = riccati_gain(&env)?;
    let mut record = RunRecord::new(
        config,
        vec![int("iteration"), float("lambda"), float("gain_gap")],
    );
    let mut rows = Vec::new();
    let (p, k) = q_learning_lq_traced(
        &env,
        &k0,
        &config.q_lq,
        &mut RngStream::new(config.seed),
        |it| {
            rows.push(vec![
                it.iteration as f64,
                it.lambda,
                gain_gap(&it.k, &k_star).unwrap_or(f64::NAN),
            ]);
        },
    )?;
    rows.into_iter().for_each(|r| record.push(r));
    record.set("final_gain_gap", gain_gap(&k, &k_star)?);
    record.set("gain", matrix_to_rows(&k));
    record.set("kernel", matrix_to_rows(&p));
    record.set("riccati_gain", matrix_to_rows(&k_star));
    Ok(record)
}

fn sysid_lq(config: &ExperimentConfig) -> Result<RunRecord> {
    let env = lq_env(config, LqSystem::TwoState)?;
    let cfg = &config.sysid;
    if cfg.report_every == 0 {
        return Err(Error::Config("sysid.report_every must be positive".into()));
    }
    let mut record = RunRecord::new(
        config,
        vec![int("samples"), float("a_error"), float("b_error")],
    );
    if cfg.samples == 0 {
        return Ok(record);
    }
    let mut rng = RngStream::new(config.seed);
    let m = env.m();
    let traj = rollout(
        &env,
        |_, r| Ok(Vector::from_vec(r.normal_vec(m)) * cfg.excitation_std),
        cfg.samples,
        &mut rng,
    )?;
    let mut last = None;
    for count in (cfg.report_every..=cfg.samples).step_by(cfg.report_every) {
        let mut prefix = traj.clone();
        prefix.states.truncate(count);
        prefix.actions.truncate(count);
        prefix.rewards.truncate(count);
        prefix.next_states.truncate(count);
        prefix.dones.truncate(count);
        match identify_linear_ss(&prefix) {
            Ok((a, b)) => {
                record.push(vec![
                    count as f64,
                    (&a - env.a()).norm(),
                    (&b - env.b()).norm(),
                ]);
                last = Some((a, b));
            }
            Err(e) => {
                log::info!("identification with {count} samples failed: {e}");
                record.push(vec![count as f64, f64::NAN, f64::NAN]);
            }
        }
    }
    if let Some((a, b)) = last {
        record.set("a_hat", matrix_to_rows(&a));
        record.set("b_hat", matrix_to_rows(&b));
    }
    Ok(record)
}

fn adaptive_lq(config: &ExperimentConfig) -> Result<RunRecord> {
    let env = lq_env(config, LqSystem::TwoState)?;
    let k_star = riccati_gain(&env)?;
    let cfg = &config.adaptive;
    let mut record = RunRecord::new(config, vec![int("replan"), int("step"), float("gain_gap")]);
    if cfg.horizon == 0 {
        return Ok(record);
    }
    let run = adaptive_lq_control(
        &env,
        cfg.horizon,
        cfg.excitation_std,
        cfg.replan_every,
        &mut RngStream::new(config.seed),
    )?;
    for (i, (k, step)) in run.gains.iter().zip(&run.replan_steps).enumerate() {
        record.push(vec![i as f64, *step as f64, gain_gap(k, &k_star)?]);
    }
    let last = run.gains.last().expect("history holds the initial gain");
    record.set("final_gain_gap", gain_gap(last, &k_star)?);
    record.set("gain", matrix_to_rows(last));
    record.set("riccati_gain", matrix_to_rows(&k_star));
    record.set(
        "average_cost",
        run.trajectory.total() / run.trajectory.len() as f64,
    );
    Ok(record)
}

/// Expected one-step reward and transition row sums of every state-action
/// pair, as aligned text.
pub fn mdp_demo_table(mdp: &TabularMdp) -> Result<String> {
    let sums = mdp.row_sums();
    let mut out = String::new();
    writeln!(
        out,
        "{:<6} {:<7} {:>16} {:>10}",
        "state", "action", "E[r(s,a)]", "row sum"
    )
    .unwrap();
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            writeln!(
                out,
                "{:<6} {:<7} {:>16.6} {:>10.6}",
                format!("s{s}"),
                format!("a{a}"),
                mdp.expected_reward(s, a)?,
                sums[a][s]
            )
            .unwrap();
        }
    }
    Ok(out)
}

fn mdp_demo(config: &ExperimentConfig) -> Result<RunRecord> {
    let mdp = TabularMdp::example_one();
    let mut record = RunRecord::new(
        config,
        vec![
            int("state"),
            int("action"),
            float("expected_reward"),
            float("row_sum"),
        ],
    );
    let sums = mdp.row_sums();
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            record.push(vec![
                s as f64,
                a as f64,
                mdp.expected_reward(s, a)?,
                sums[a][s],
            ]);
        }
    }
    let all_rows_stochastic = sums.iter().flatten().all(|v| (v - 1.0).abs() <= 1e-12);
    record.set("rows_sum_to_one", all_rows_stochastic);
    if config.mdp.steps > 0 {
        let mut rng = RngStream::new(config.seed);
        let n_a = mdp.n_actions();
        let traj = rollout(&mdp, |_, r| Ok(r.index(n_a)), config.mdp.steps, &mut rng)?;
        record.set("random_policy_return", traj.total());
        record.set(
            "visited_states",
            traj.states.iter().map(|&s| s as u64).collect::<Vec<_>>(),
        );
    }
    record
        .artifacts
        .push(("reward_table.txt".into(), mdp_demo_table(&mdp)?));
    Ok(record)
}
