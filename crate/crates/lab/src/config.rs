//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use prm_core::experiment::toys;
use prm_core::labeled_mdp::{riverswim, warehouse};
use prm_core::reward_free::{ExploreConfig, Planner};
use prm_core::ucbvi::{AgentHyper, Algorithm};
use prm_core::Environment;

use crate::env_format;
use crate::error::{read_file, LabError, Result};
use crate::rm_format::ParseOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "environment", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Riverswim {
        num_obs: usize,
        horizon: usize,
    },
    Warehouse {
        grid: usize,
        horizon: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout: Option<warehouse::Layout>,
    },
    /// An RM document plus a labeled-MDP document; relative paths resolve
    /// against the config file's directory.
    File {
        rm_path: PathBuf,
        mdp_path: PathBuf,
        #[serde(default)]
        strict: bool,
    },
    /// Four observations, two actions, two-state machine.
    FourState {
        horizon: usize,
    },
}

impl EnvironmentConfig {
    pub fn build(&self, base_dir: &Path) -> Result<Environment> {
        Ok(match self {
            EnvironmentConfig::Riverswim { num_obs, horizon } => riverswim::build(*num_obs, *horizon)?,
            EnvironmentConfig::Warehouse { grid, horizon, layout } => match layout {
                Some(l) => warehouse::build_with_layout(*grid, *horizon, *l)?,
                None => warehouse::build(*grid, *horizon)?,
            },
            EnvironmentConfig::File { rm_path, mdp_path, strict } => {
                let rm = read_file(&base_dir.join(rm_path))?;
                let mdp = read_file(&base_dir.join(mdp_path))?;
                env_format::parse_environment(&rm, &mdp, ParseOptions { strict: *strict })?
            }
            EnvironmentConfig::FourState { horizon } => toys::four_state(*horizon)?,
        })
    }
}

/// One coefficient or a list to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl GammaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GammaSpec::One(g) => vec![*g],
            GammaSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    CrossProduct,
    HistoryDp,
}

impl From<PlannerKind> for Planner {
    fn from(p: PlannerKind) -> Self {
        match p {
            PlannerKind::CrossProduct => Planner::CrossProduct,
            PlannerKind::HistoryDp => Planner::HistoryDp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardFreeConfig {
    #[serde(default = "default_n0")]
    pub episodes_per_target: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_explore_gamma")]
    pub explore_gamma: f64,
    #[serde(default = "default_planner")]
    pub planner: PlannerKind,
    /// Plan on the true kernel (debugging aid).
    #[serde(default)]
    pub inject_truth: bool,
    /// Number of seeds, `seed_base .. seed_base + seeds`.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
}

impl Default for RewardFreeConfig {
    fn default() -> Self {
        Self {
            episodes_per_target: default_n0(),
            trajectories: default_trajectories(),
            explore_gamma: default_explore_gamma(),
            planner: default_planner(),
            inject_truth: false,
            seeds: default_seeds(),
        }
    }
}

impl RewardFreeConfig {
    pub fn explore_config(&self, rho: f64) -> ExploreConfig {
        ExploreConfig { episodes_per_target: self.episodes_per_target, gamma: self.explore_gamma, rho, doubling: true }
    }
}

fn default_n0() -> usize {
    2000
}
fn default_trajectories() -> usize {
    50_000
}
fn default_explore_gamma() -> f64 {
    0.1
}
fn default_planner() -> PlannerKind {
    PlannerKind::CrossProduct
}
fn default_seeds() -> usize {
    10
}
fn default_runs() -> usize {
    16
}
fn default_rho() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_eval_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub environment: EnvironmentConfig,
    pub algorithm: Algorithm,
    /// Episodes per run, `K`.
    #[serde(alias = "K")]
    pub episodes: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed_base: u64,
    /// Defaults to the algorithm's tuned coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSpec>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_true")]
    pub doubling: bool,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_free: Option<RewardFreeConfig>,
    /// Directory the config was read from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| LabError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&read_file(path)?)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0,1), got {}", self.rho));
        }
        let gammas = self.gammas();
        if gammas.is_empty() {
            return bad("gamma list is empty".into());
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return bad(format!("gamma must be a nonnegative number, got {g}"));
        }
        if let Some(rf) = &self.reward_free {
            if rf.episodes_per_target == 0 || rf.seeds == 0 {
                return bad("reward_free needs episodes_per_target >= 1 and seeds >= 1".into());
            }
        }
        Ok(())
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.gamma.as_ref().map_or_else(|| vec![self.algorithm.default_gamma()], GammaSpec::values)
    }

    /// Candidates for a sweep: the configured list, or the algorithm's
    /// default grid when a single value (or none) is configured.
    pub fn sweep_candidates(&self) -> Vec<f64> {
        match &self.gamma {
            Some(GammaSpec::Many(v)) => v.clone(),
            _ => self.algorithm.gamma_candidates().to_vec(),
        }
    }

    pub fn hyper(&self, gamma: f64) -> Result<AgentHyper> {
        Ok(AgentHyper::new(self.rho, gamma, self.episodes, self.doubling)?)
    }

    pub fn build_environment(&self) -> Result<Environment> {
        self.environment.build(&self.base_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_aliases() {
        let c = ExperimentConfig::from_json(r#"{"environment": "riverswim", "num_obs": 5, "horizon": 10, "algorithm": "ucbvi_prm", "K": 100}"#).unwrap();
        assert_eq!(c.episodes, 100);
        assert_eq!(c.runs, 16);
        assert_eq!(c.gammas(), vec![0.001]);
        assert_eq!(c.sweep_candidates(), vec![0.001, 0.01, 0.1, 0.5, 1.0, 2.0]);
        assert!(c.doubling);
        assert_eq!(c.eval_every, 1);
    }

    #[test]
    fn gamma_lists() {
        let c = ExperimentConfig::from_json(
            r#"{"environment": "warehouse", "grid": 3, "horizon": 9, "algorithm": "ucrl2_rm_l", "episodes": 10, "gamma": [0.1, 0.5]}"#,
        )
        .unwrap();
        assert_eq!(c.gammas(), vec![0.1, 0.5]);
        assert_eq!(c.sweep_candidates(), vec![0.1, 0.5]);
    }

    #[test]
    fn invalid_configs() {
        for doc in [
            r#"{"environment": "riverswim", "num_obs": 5, "horizon": 10, "algorithm": "ucbvi_prm", "episodes": 10, "runs": 0}"#,
            r#"{"environment": "riverswim", "num_obs": 5, "horizon": 10, "algorithm": "ucbvi_prm", "episodes": 10, "eval_every": 0}"#,
            r#"{"environment": "riverswim", "num_obs": 5, "horizon": 10, "algorithm": "nope", "episodes": 10}"#,
            r#"{"environment": "moon", "algorithm": "ucbvi_prm", "episodes": 10}"#,
            r#"{"environment": "riverswim", "num_obs": 5, "horizon": 10, "algorithm": "ucbvi_prm", "episodes": 10, "gamma": []}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(doc), Err(LabError::Config(_))), "{doc}");
        }
    }
}
