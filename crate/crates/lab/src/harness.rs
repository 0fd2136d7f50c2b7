//! Seeded multi-run experiments and their CSV logs.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use prm_core::experiment::{self, RegretRow, RewardFreeReport, RewardFreeSettings, SweepSummary};
use prm_core::reward_free::ExplorationDataset;
use prm_core::rng::RNG_NAME;
use prm_core::ucbvi::{self, AgentState, Algorithm, RunLog, RunOptions};
use prm_core::Environment;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

pub const CSV_HEADER: [&str; 7] = ["algorithm", "run", "episode", "episodic_regret", "cumulative_regret", "gamma", "seed"];

/// Agent snapshot for resuming or inspecting long runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub agent: AgentState,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoints always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Logs of every run of one configuration at one γ.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub gamma: f64,
    pub logs: Vec<RunLog>,
    pub checkpoints: Vec<Checkpoint>,
}

impl Experiment {
    pub fn rows(&self) -> Vec<RegretRow> {
        self.logs.iter().enumerate().flat_map(|(run, log)| experiment::rows_of(run, log)).collect()
    }

    pub fn summary(&self) -> SweepSummary {
        experiment::summarize(self.gamma, &self.logs)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSettings {
    /// Keep each run's final agent state.
    pub checkpoints: bool,
}

/// Runs `config.runs` seeded runs at coefficient `gamma` in parallel; the
/// result is ordered by run index.
pub fn run_experiment(config: &ExperimentConfig, env: &Environment, gamma: f64, settings: RunSettings) -> Result<Experiment> {
    let hyper = config.hyper(gamma)?;
    let options = RunOptions { eval_every: config.eval_every };
    let results: Vec<(RunLog, Option<Checkpoint>)> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let seed = experiment::run_seed(config.seed_base, run);
            let mut last = None;
            let log = ucbvi::run_observed(env, config.algorithm, hyper, seed, options, |agent, record| {
                if settings.checkpoints && record.episode == hyper.episodes {
                    last = Some(Checkpoint { algorithm: config.algorithm, run, seed, agent: agent.clone() });
                }
            });
            (log, last)
        })
        .collect();
    let (logs, checkpoints): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(Experiment { gamma, logs, checkpoints: checkpoints.into_iter().flatten().collect() })
}

/// Writes rows in the harness schema, preceded by a `# prng:` comment line.
pub fn write_csv<W: Write>(rows: &[RegretRow], mut out: W) -> Result<()> {
    writeln!(out, "# prng: {RNG_NAME}").map_err(|e| LabError::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.run.to_string(),
            r.episode.to_string(),
            r.episodic_regret.to_string(),
            r.cumulative_regret.to_string(),
            r.gamma.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| LabError::io("<csv>", e))?;
    Ok(())
}

pub fn csv_string(rows: &[RegretRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Reads rows back, skipping `#` comment lines.
pub fn read_csv(text: &str) -> Result<Vec<RegretRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let parse_err = |what: &str| LabError::Semantic(format!("bad {what} in regret csv"));
        rows.push(RegretRow {
            algorithm: Algorithm::from_name(field(0)).ok_or_else(|| parse_err("algorithm"))?,
            run: field(1).parse().map_err(|_| parse_err("run"))?,
            episode: field(2).parse().map_err(|_| parse_err("episode"))?,
            episodic_regret: field(3).parse().map_err(|_| parse_err("episodic_regret"))?,
            cumulative_regret: field(4).parse().map_err(|_| parse_err("cumulative_regret"))?,
            gamma: field(5).parse().map_err(|_| parse_err("gamma"))?,
            seed: field(6).parse().map_err(|_| parse_err("seed"))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub experiments: Vec<Experiment>,
    pub summaries: Vec<SweepSummary>,
    pub best: SweepSummary,
}

pub fn sweep_gamma(config: &ExperimentConfig, env: &Environment, candidates: &[f64]) -> Result<Sweep> {
    if candidates.is_empty() {
        return Err(LabError::Config("a sweep needs at least one candidate".into()));
    }
    let experiments = candidates
        .iter()
        .map(|&g| run_experiment(config, env, g, RunSettings::default()))
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<SweepSummary> = experiments.iter().map(Experiment::summary).collect();
    let best = experiment::best_gamma(&summaries).expect("at least one candidate");
    Ok(Sweep { experiments, summaries, best })
}

pub fn summary_csv(summaries: &[SweepSummary], best: &SweepSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["gamma", "mean_final_regret", "stderr_final_regret", "best"])?;
    for s in summaries {
        w.write_record([
            s.gamma.to_string(),
            s.mean_final_regret.to_string(),
            s.stderr_final_regret.to_string(),
            (s.gamma == best.gamma).to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardFreeOutcome {
    pub seed: u64,
    pub episodes_per_target: usize,
    pub trajectories: usize,
    pub optimal_value: f64,
    pub planned_value: f64,
    pub gap: f64,
    pub kernel_error: f64,
}

impl RewardFreeOutcome {
    fn new(seed: u64, r: RewardFreeReport) -> Self {
        Self {
            seed,
            episodes_per_target: r.episodes_per_target,
            trajectories: r.num_trajectories,
            optimal_value: r.optimal_value,
            planned_value: r.planned_value,
            gap: r.gap,
            kernel_error: r.kernel_error,
        }
    }
}

/// Explore-then-plan for every configured seed, in parallel.
pub fn reward_free_experiment(config: &ExperimentConfig, env: &Environment) -> Result<Vec<RewardFreeOutcome>> {
    let rf = config.reward_free.clone().unwrap_or_default();
    let settings = RewardFreeSettings {
        explore: rf.explore_config(config.rho),
        num_trajectories: rf.trajectories,
        planner: rf.planner.into(),
        inject_truth: rf.inject_truth,
    };
    // refuse oversized instances before spending time exploring
    prm_core::reward_free::NmReward::from_environment(env).upper_bound(env.mdp.initial_obs())?;
    (0..rf.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = experiment::run_seed(config.seed_base, i);
            Ok(RewardFreeOutcome::new(seed, experiment::reward_free_run(env, &settings, seed)?))
        })
        .collect()
}

/// One row per transition: `episode,h,o,a,o_next`, with 1-based episode
/// and step.
pub fn write_dataset<W: Write>(data: &ExplorationDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "h", "o", "a", "o_next"])?;
    for (k, traj) in data.trajectories.iter().enumerate() {
        for (h, &(o, a, o2)) in traj.iter().enumerate() {
            w.serialize((k + 1, h + 1, o, a, o2))?;
        }
    }
    w.flush().map_err(|e| LabError::io("<csv>", e))?;
    Ok(())
}
