use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::{CartPole, LinearQuadraticEnv};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::pg::PgLqConfig;
use crate::qlearn::{LqQlConfig, DEFAULT_CAPACITY, EPSILON_DECAY, EPSILON_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    PgCartpole,
    QCartpole,
    ReplayQCartpole,
    PgLq,
    QLq,
    SysidLq,
    AdaptiveLq,
    MdpDemo,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::PgCartpole,
        ExperimentName::QCartpole,
        ExperimentName::ReplayQCartpole,
        ExperimentName::PgLq,
        ExperimentName::QLq,
        ExperimentName::SysidLq,
        ExperimentName::AdaptiveLq,
        ExperimentName::MdpDemo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::PgCartpole => "pg-cartpole",
            ExperimentName::QCartpole => "q-cartpole",
            ExperimentName::ReplayQCartpole => "replay-q-cartpole",
            ExperimentName::PgLq => "pg-lq",
            ExperimentName::QLq => "q-lq",
            ExperimentName::SysidLq => "sysid-lq",
            ExperimentName::AdaptiveLq => "adaptive-lq",
            ExperimentName::MdpDemo => "mdp-demo",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|e| e.as_str()).collect();
                Error::Config(format!(
                    "unknown experiment `{s}` (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

/// Greedy evaluation protocol for the cartpole experiments: every
/// `every` training episodes the frozen network plays `episodes` episodes
/// without exploration; the task counts as solved when their mean return
/// reaches `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub every: usize,
    pub episodes: usize,
    pub threshold: f64,
    pub stop_when_solved: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            every: 10,
            episodes: 100,
            threshold: 195.0,
            stop_when_solved: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgCartpoleConfig {
    pub episodes: usize,
    pub hidden: usize,
    pub gamma: f64,
    pub learning_rate: f64,
}

impl Default for PgCartpoleConfig {
    fn default() -> Self {
        Self {
            episodes: 2000,
            hidden: 30,
            gamma: 0.99,
            learning_rate: 0.005,
        }
    }
}

/// Settings shared by `q-cartpole` and `replay-q-cartpole`; the memory and
/// decay fields only apply to the replay variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QCartpoleConfig {
    pub episodes: usize,
    pub hidden: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub batch_size: usize,
    pub memory_capacity: usize,
}

impl Default for QCartpoleConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            hidden: 30,
            gamma: 0.95,
            learning_rate: 1e-3,
            epsilon: 1.0,
            epsilon_decay: EPSILON_DECAY,
            epsilon_floor: EPSILON_FLOOR,
            batch_size: 32,
            memory_capacity: DEFAULT_CAPACITY,
        }
    }
}

/// A linear-quadratic system: one of the two built-in benchmarks or explicit
/// row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum LqSystem {
    Scalar,
    TwoState,
    Custom {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        w: Vec<Vec<f64>>,
    },
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!(
            "matrix `{what}` must be a non-empty rectangular list of rows"
        )));
    }
    Ok(Matrix::from_row_iterator(
        r,
        c,
        rows.iter().flatten().copied(),
    ))
}

pub(crate) fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|row| row.iter().copied().collect())
        .collect()
}

impl LqSystem {
    pub fn build(&self) -> Result<LinearQuadraticEnv> {
        match self {
            LqSystem::Scalar => Ok(LinearQuadraticEnv::scalar_benchmark()),
            LqSystem::TwoState => Ok(LinearQuadraticEnv::two_state_benchmark()),
            LqSystem::Custom { a, b, q, r, w } => LinearQuadraticEnv::new(
                matrix_from_rows(a, "a")?,
                matrix_from_rows(b, "b")?,
                matrix_from_rows(w, "w")?,
                matrix_from_rows(q, "q")?,
                matrix_from_rows(r, "r")?,
            ),
        }
    }
}

/// Linear-quadratic settings shared by the LQ experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqConfig {
    /// System under control; `pg-lq` defaults to the scalar benchmark and the
    /// other LQ experiments to the two-state benchmark.
    pub system: Option<LqSystem>,
    /// Initial gain as rows; zeros when absent.
    pub k0: Option<Vec<Vec<f64>>>,
    /// Standard deviation of each initial-state coordinate.
    pub init_std: f64,
}

impl Default for LqConfig {
    fn default() -> Self {
        Self {
            system: None,
            k0: None,
            init_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SysidConfig {
    pub samples: usize,
    pub excitation_std: f64,
    /// Identification is repeated on the first `report_every`, `2·report_every`, … samples.
    pub report_every: usize,
}

impl Default for SysidConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            excitation_std: 1.0,
            report_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub horizon: usize,
    pub excitation_std: f64,
    pub replan_every: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            horizon: 2000,
            excitation_std: 10.0,
            replan_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdpDemoConfig {
    /// Length of the simulated episode that accompanies the reward table.
    pub steps: usize,
}

impl Default for MdpDemoConfig {
    fn default() -> Self {
        Self { steps: 20 }
    }
}

/// Everything needed to run one experiment. Every field has a default, so
/// `{}` is a valid configuration (it runs `mdp-demo`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cartpole: CartPole,
    pub eval: EvalConfig,
    pub pg_cartpole: PgCartpoleConfig,
    pub q_cartpole: QCartpoleConfig,
    pub lq: LqConfig,
    pub pg_lq: PgLqConfig,
    pub q_lq: LqQlConfig,
    pub sysid: SysidConfig,
    pub adaptive: AdaptiveConfig,
    pub mdp: MdpDemoConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentName::MdpDemo,
            seed: 0,
            output_dir: PathBuf::from("results"),
            cartpole: CartPole::default(),
            eval: EvalConfig::default(),
            pg_cartpole: PgCartpoleConfig::default(),
            q_cartpole: QCartpoleConfig::default(),
            lq: LqConfig::default(),
            pg_lq: PgLqConfig::default(),
            q_lq: LqQlConfig::default(),
            sysid: SysidConfig::default(),
            adaptive: AdaptiveConfig::default(),
            mdp: MdpDemoConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(experiment: ExperimentName) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    /// Parses a JSON document; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("field `{path}`: {}", e.into_inner()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval.episodes == 0 || self.eval.every == 0 {
            return Err(Error::Config(
                "eval.every and eval.episodes must be positive".into(),
            ));
        }
        if self.q_cartpole.batch_size == 0 || self.q_cartpole.memory_capacity == 0 {
            return Err(Error::Config(
                "q_cartpole.batch_size and q_cartpole.memory_capacity must be positive".into(),
            ));
        }
        if self.lq.init_std < 0.0 {
            return Err(Error::Config("lq.init_std must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.experiment, ExperimentName::MdpDemo);
        assert_eq!(cfg.pg_lq.step_size, 0.1);
        assert_eq!(cfg.q_lq.explore_mag, 1.0);
        assert_eq!(cfg.q_cartpole.memory_capacity, 100_000);
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::for_experiment(ExperimentName::QLq);
        cfg.seed = 42;
        cfg.lq.system = Some(LqSystem::Custom {
            a: vec![vec![0.5]],
            b: vec![vec![1.0]],
            q: vec![vec![1.0]],
            r: vec![vec![2.0]],
            w: vec![vec![0.0]],
        });
        cfg.lq.k0 = Some(vec![vec![-0.1]]);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let err = ExperimentConfig::from_json(r#"{"pg_lq": {"batch_size": -1}}"#).unwrap_err();
        assert!(err.to_string().contains("pg_lq.batch_size"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"experiment": "nope"}"#).unwrap_err();
        assert!(err.to_string().contains("experiment"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"eval": {"evry": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("evry"), "{err}");
    }

    #[test]
    fn names_parse_both_ways() {
        for name in ExperimentName::ALL {
            assert_eq!(name.as_str().parse::<ExperimentName>().unwrap(), name);
            let json = serde_json::to_string(&name).unwrap();
            assert_eq!(json, format!("\"{name}\""));
        }
        assert!(matches!(
            "bogus".parse::<ExperimentName>(),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn custom_system_validation() {
        let bad = LqSystem::Custom {
            a: vec![vec![1.0, 0.0]],
            b: vec![vec![1.0]],
            q: vec![vec![1.0]],
            r: vec![vec![1.0]],
            w: vec![vec![0.0]],
        };
        assert!(bad.build().is_err());
        assert!(matrix_from_rows(&[vec![1.0], vec![1.0, 2.0]], "x").is_err());
    }
}
