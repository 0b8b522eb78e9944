//! Experiment runner.
//!
//! An [`ExperimentConfig`] names one of the eight experiments and carries
//! every hyperparameter, each with a default. [`run_experiment`] produces a
//! [`RunRecord`] and [`write_results`] stores it as `metrics.csv` plus
//! `summary.json`.
//!
//! Metrics columns per experiment:
//!
//! | experiment | columns |
//! |---|---|
//! | `pg-cartpole` | `episode, return, loss, eval_mean` |
//! | `q-cartpole`, `replay-q-cartpole` | `episode, return, loss, epsilon, eval_mean` |
//! | `pg-lq` | `iteration, mean_reward, gain_gap` |
//! | `q-lq` | `iteration, lambda, gain_gap` |
//! | `sysid-lq` | `samples, a_error, b_error` |
//! | `adaptive-lq` | `replan, step, gain_gap` |
//! | `mdp-demo` | `state, action, expected_reward, row_sum` |
//!
//! `eval_mean` is `NaN` on episodes without a greedy evaluation.

mod cartpole;
mod config;
mod metrics;
mod runner;

pub use cartpole::{
    evaluate_greedy, train_pg_cartpole, train_q_cartpole, CartpoleOutcome, EpisodeRow,
};
pub use config::{
    load_config, AdaptiveConfig, EvalConfig, ExperimentConfig, ExperimentName, LqConfig, LqSystem,
    MdpDemoConfig, PgCartpoleConfig, QCartpoleConfig, SysidConfig,
};
pub use metrics::{
    check_solved, check_solved_with, gain_gap, write_results, Column, ColumnKind, RunRecord,
    SOLVED_THRESHOLD, SOLVED_WINDOW,
};
pub use runner::{mdp_demo_table, run_experiment};
