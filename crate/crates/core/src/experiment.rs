//! Experiment building blocks without IO: seeded multi-run regret logs,
//! summaries, and the reward-free pipeline on small environments.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::error::Result;
use crate::labeled_mdp::{Environment, LabeledMdp};
use crate::reward_free::{self, ExploreConfig, Kernel, NmPolicy, NmReward, Planner};
use crate::reward_machine::{EventAlphabet, RewardMachineBuilder};
use crate::ucbvi::{self, AgentHyper, Algorithm, RunLog, RunOptions};

/// One CSV row of a regret log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegretRow {
    pub algorithm: Algorithm,
    pub run: usize,
    pub episode: usize,
    pub episodic_regret: f64,
    pub cumulative_regret: f64,
    pub gamma: f64,
    pub seed: u64,
}

pub fn rows_of(run: usize, log: &RunLog) -> Vec<RegretRow> {
    log.records
        .iter()
        .map(|r| RegretRow {
            algorithm: log.algorithm,
            run,
            episode: r.episode,
            episodic_regret: r.episodic_regret,
            cumulative_regret: r.cumulative_regret,
            gamma: log.gamma,
            seed: log.seed,
        })
        .collect()
}

/// Seed of run `run`.
pub fn run_seed(seed_base: u64, run: usize) -> u64 {
    seed_base.wrapping_add(run as u64)
}

/// Executes one seeded run.
pub fn single_run(env: &Environment, algorithm: Algorithm, hyper: AgentHyper, seed: u64, eval_every: usize) -> RunLog {
    ucbvi::run_observed(env, algorithm, hyper, seed, RunOptions { eval_every }, |_, _| {})
}

/// Sample mean and standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}

/// Mean cumulative regret per episode across runs.
pub fn mean_curve(logs: &[RunLog]) -> Vec<f64> {
    let len = logs.iter().map(|l| l.records.len()).min().unwrap_or(0);
    let mut curve = vec![0.0; len];
    for log in logs {
        for (c, r) in curve.iter_mut().zip(&log.records) {
            *c += r.cumulative_regret;
        }
    }
    let n = logs.len().max(1) as f64;
    curve.iter_mut().for_each(|c| *c /= n);
    curve
}

/// Average per-episode growth of `curve` over episodes `[from, to)`.
pub fn window_slope(curve: &[f64], from: usize, to: usize) -> f64 {
    if to <= from || to > curve.len() {
        return 0.0;
    }
    let before = if from == 0 { 0.0 } else { curve[from - 1] };
    (curve[to - 1] - before) / (to - from) as f64
}

/// Slopes over the first and last `fraction` of the curve.
pub fn head_tail_slopes(curve: &[f64], fraction: f64) -> (f64, f64) {
    let k = curve.len();
    let w = ((k as f64 * fraction) as usize).max(1).min(k);
    (window_slope(curve, 0, w), window_slope(curve, k - w, k))
}

/// Per-γ outcome of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepSummary {
    pub gamma: f64,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
}

pub fn summarize(gamma: f64, logs: &[RunLog]) -> SweepSummary {
    let finals: Vec<f64> = logs.iter().map(RunLog::final_regret).collect();
    let (mean_final_regret, stderr_final_regret) = mean_and_stderr(&finals);
    SweepSummary { gamma, mean_final_regret, stderr_final_regret }
}

/// Candidate with the lowest mean final regret, first on ties.
pub fn best_gamma(summaries: &[SweepSummary]) -> Option<SweepSummary> {
    summaries.iter().copied().fold(None, |best: Option<SweepSummary>, s| match best {
        Some(b) if b.mean_final_regret <= s.mean_final_regret => Some(b),
        _ => Some(s),
    })
}

/// Outcome of explore-then-plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardFreeReport {
    pub episodes_per_target: usize,
    pub num_trajectories: usize,
    pub optimal_value: f64,
    pub planned_value: f64,
    pub gap: f64,
    pub kernel_error: f64,
}

/// Settings of a reward-free run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardFreeSettings {
    pub explore: ExploreConfig,
    pub num_trajectories: usize,
    pub planner: Planner,
    /// Plan on the true kernel instead of the estimate.
    pub inject_truth: bool,
}

/// Explores `env` without its reward, plans for the machine reward and
/// reports the exact optimality gap on the true kernel.
pub fn reward_free_run(env: &Environment, settings: &RewardFreeSettings, seed: u64) -> Result<RewardFreeReport> {
    let reward = NmReward::from_environment(env);
    let truth = Kernel::of(&env.mdp);
    let kernel = if settings.inject_truth {
        truth.clone()
    } else {
        let data = reward_free::explore(&env.mdp, &settings.explore, settings.num_trajectories, seed)?;
        data.empirical_kernel(env.mdp.initial_obs())
    };
    let planned: NmPolicy = settings.planner.plan(&kernel, &reward)?;
    let best = settings.planner.plan(&truth, &reward)?;
    let optimal_value = reward_free::evaluate(&truth, &best, &reward)?;
    let planned_value = reward_free::evaluate(&truth, &planned, &reward)?;
    Ok(RewardFreeReport {
        episodes_per_target: settings.explore.episodes_per_target,
        num_trajectories: settings.num_trajectories,
        optimal_value,
        planned_value,
        gap: optimal_value - planned_value,
        kernel_error: truth.max_abs_diff(&kernel),
    })
}

pub mod toys {
    //! Small environments for the reward-free pipeline.
    use super::*;

    /// Four observations, two actions, a two-state machine that pays when
    /// the goal is reached and, once there, pays again on returning home.
    pub fn four_state(horizon: usize) -> Result<Environment> {
        let (on, an) = (4, 2);
        #[rustfmt::skip]
        let p = vec![
            // o0
            0.6, 0.3, 0.1, 0.0,
            0.1, 0.2, 0.5, 0.2,
            // o1
            0.2, 0.5, 0.0, 0.3,
            0.0, 0.3, 0.3, 0.4,
            // o2
            0.5, 0.0, 0.5, 0.0,
            0.1, 0.1, 0.2, 0.6,
            // o3
            0.7, 0.0, 0.0, 0.3,
            0.0, 0.5, 0.5, 0.0,
        ];
        let mut alphabet = EventAlphabet::new();
        let home = alphabet.insert(["home"]);
        let goal = alphabet.insert(["goal"]);
        let mut labels = vec![EventAlphabet::EMPTY; on * an * on];
        for o in 0..on {
            for a in 0..an {
                labels[(o * an + a) * on] = home;
                labels[(o * an + a) * on + 3] = goal;
            }
        }
        let mdp = LabeledMdp::new(on, an, horizon, p, labels, 0)?;
        let mut rm = RewardMachineBuilder::new(2, alphabet.len(), 0);
        rm.transition(0, goal, 1, 0.7, 1.0)?;
        rm.transition(0, goal, 0, 0.3, 0.2)?;
        rm.transition(1, home, 0, 1.0, 0.5)?;
        Environment::new(mdp, rm.build()?, alphabet)
    }

    /// Three observations with a rarely reached third one.
    pub fn three_state(horizon: usize) -> Result<LabeledMdp> {
        #[rustfmt::skip]
        let p = vec![
            0.8, 0.2, 0.0,
            0.3, 0.6, 0.1,
            0.5, 0.5, 0.0,
            0.0, 0.7, 0.3,
            0.4, 0.0, 0.6,
            0.9, 0.1, 0.0,
        ];
        LabeledMdp::new(3, 2, horizon, p, vec![0; 18], 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeled_mdp::riverswim;

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slopes_of_a_line() {
        let curve: Vec<f64> = (1..=100).map(|k| 2.0 * k as f64).collect();
        let (head, tail) = head_tail_slopes(&curve, 0.1);
        assert!((head - 2.0).abs() < 1e-12 && (tail - 2.0).abs() < 1e-12);
    }

    #[test]
    fn best_gamma_prefers_lowest_regret() {
        let s = |g, m| SweepSummary { gamma: g, mean_final_regret: m, stderr_final_regret: 0.0 };
        assert_eq!(best_gamma(&[s(1.0, 5.0), s(0.1, 2.0), s(0.5, 2.0)]).unwrap().gamma, 0.1);
        assert!(best_gamma(&[]).is_none());
    }

    #[test]
    fn rows_follow_records() {
        let env = riverswim::build(3, 4).unwrap();
        let log = single_run(&env, Algorithm::UcbviPrm, AgentHyper::experiment(20), 9, 1);
        let rows = rows_of(2, &log);
        assert_eq!(rows.len(), 20);
        assert!(rows.windows(2).all(|w| w[0].cumulative_regret <= w[1].cumulative_regret));
        assert!(rows.iter().all(|r| r.run == 2 && r.seed == 9));
    }

    #[test]
    fn truth_injection_has_no_gap() {
        let env = toys::four_state(3).unwrap();
        let settings = RewardFreeSettings {
            explore: ExploreConfig::new(1),
            num_trajectories: 0,
            planner: Planner::CrossProduct,
            inject_truth: true,
        };
        let report = reward_free_run(&env, &settings, 0).unwrap();
        assert_eq!(report.gap, 0.0);
        assert_eq!(report.kernel_error, 0.0);
    }
}
