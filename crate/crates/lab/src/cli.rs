//! The `prm-lab` command line.

use std::path::{Path, PathBuf};
use std::ffi::OsString;

use clap::{Parser, Subcommand};

use prm_core::experiment::run_seed;
use prm_core::reward_free;
use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::harness::{self, RunSettings};
use crate::{env_format, rm_format, Result};

#[derive(Parser)]
#[command(name = "prm-lab", version, about = "Regret experiments for learning with probabilistic reward machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured seed and write the regret CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory for final agent checkpoints (JSON, one per run).
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
    /// Run each candidate coefficient and report the best one.
    SweepGamma {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Explore without rewards, then plan for the machine reward.
    RewardFree {
        #[arg(long)]
        config: PathBuf,
        /// JSON report, one entry per seed.
        #[arg(long)]
        out: PathBuf,
        /// CSV of the first seed's exploration trajectories.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Write the configured environment as an RM document and an MDP document.
    ExportEnv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rm_out: PathBuf,
        #[arg(long)]
        mdp_out: PathBuf,
        /// Include the product kernel and reward.
        #[arg(long)]
        product: bool,
    },
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| LabError::io(path, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out, checkpoints } => {
            let config = ExperimentConfig::load(&config)?;
            let env = config.build_environment()?;
            let settings = RunSettings { checkpoints: checkpoints.is_some() };
            let mut rows = Vec::new();
            for gamma in config.gammas() {
                let exp = harness::run_experiment(&config, &env, gamma, settings)?;
                if let Some(dir) = &checkpoints {
                    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
                    for c in &exp.checkpoints {
                        write(&dir.join(format!("{}_g{}_run{}.json", c.algorithm.name(), gamma, c.run)), c.to_json())?;
                    }
                }
                rows.extend(exp.rows());
            }
            write(&out, harness::csv_string(&rows)?)
        }
        Command::SweepGamma { config, out, summary } => {
            let config = ExperimentConfig::load(&config)?;
            let env = config.build_environment()?;
            let sweep = harness::sweep_gamma(&config, &env, &config.sweep_candidates())?;
            let rows: Vec<_> = sweep.experiments.iter().flat_map(|e| e.rows()).collect();
            write(&out, harness::csv_string(&rows)?)?;
            let table = harness::summary_csv(&sweep.summaries, &sweep.best)?;
            match summary {
                Some(path) => write(&path, table)?,
                None => print!("{table}"),
            }
            println!("best gamma: {}", sweep.best.gamma);
            Ok(())
        }
        Command::RewardFree { config, out, dataset } => {
            let config = ExperimentConfig::load(&config)?;
            let env = config.build_environment()?;
            let outcomes = harness::reward_free_experiment(&config, &env)?;
            write(&out, serde_json::to_string_pretty(&outcomes)? + "\n")?;
            if let Some(path) = dataset {
                let rf = config.reward_free.clone().unwrap_or_default();
                let data =
                    reward_free::explore(&env.mdp, &rf.explore_config(config.rho), rf.trajectories, run_seed(config.seed_base, 0))?;
                let mut buf = Vec::new();
                harness::write_dataset(&data, &mut buf)?;
                write(&path, buf)?;
            }
            for o in &outcomes {
                println!("seed {}: gap {:.6}", o.seed, o.gap);
            }
            Ok(())
        }
        Command::ExportEnv { config, rm_out, mdp_out, product } => {
            let config = ExperimentConfig::load(&config)?;
            let env = config.build_environment()?;
            write(&rm_out, rm_format::serialize_rm(&env.rm, &env.alphabet, &[]))?;
            write(&mdp_out, env_format::serialize_mdp(&env, product))
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand; returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(args: &[&str]) -> i32 {
        run(std::iter::once("prm-lab").chain(args.iter().copied()))
    }

    fn write(dir: &Path, name: &str, body: &str) -> String {
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path.to_str().unwrap().to_string()
    }

    const RIVER: &str = r#"{"environment": "riverswim", "num_obs": 3, "horizon": 4, "algorithm": "ucbvi_prm", "episodes": 30, "runs": 2}"#;

    #[test]
    fn run_writes_the_regret_csv() {
        let dir = tempfile::tempdir().unwrap();
        let config = write(dir.path(), "c.json", RIVER);
        let out = dir.path().join("out.csv");
        assert_eq!(lab(&["run", "--config", &config, "--out", out.to_str().unwrap()]), 0);
        let first = std::fs::read_to_string(&out).unwrap();
        assert_eq!(first.lines().count(), 2 + 60);
        lab(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
    }

    #[test]
    fn exported_environments_load_back_as_file_configs() {
        let dir = tempfile::tempdir().unwrap();
        let config = write(dir.path(), "c.json", RIVER);
        let status = lab(&["export-env", "--config", &config, "--rm-out", &format!("{}/rm.json", dir.path().display()), "--mdp-out", &format!("{}/mdp.json", dir.path().display())]);
        assert_eq!(status, 0);
        let file_config = write(
            dir.path(),
            "f.json",
            r#"{"environment": "file", "rm_path": "rm.json", "mdp_path": "mdp.json", "strict": true, "algorithm": "ucbvi_prm", "episodes": 30, "runs": 2}"#,
        );
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        assert!(lab(&["run", "--config", &config, "--out", a.to_str().unwrap()]) == 0);
        assert!(lab(&["run", "--config", &file_config, "--out", b.to_str().unwrap()]) == 0);
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn sweep_and_reward_free_subcommands() {
        let dir = tempfile::tempdir().unwrap();
        let config = write(
            dir.path(),
            "c.json",
            r#"{"environment": "four_state", "horizon": 3, "algorithm": "ucbvi_prm", "episodes": 20, "runs": 2, "gamma": [0.01, 0.1],
                "reward_free": {"episodes_per_target": 10, "trajectories": 50, "seeds": 2}}"#,
        );
        let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
        let sweep = lab(&["sweep-gamma", "--config", &config, "--out", &p("s.csv"), "--summary", &p("sum.csv")]);
        assert!(sweep == 0);
        assert_eq!(std::fs::read_to_string(p("sum.csv")).unwrap().lines().count(), 3);
        let rf = lab(&["reward-free", "--config", &config, "--out", &p("rf.json"), "--dataset", &p("d.csv")]);
        assert_eq!(rf, 0);
        let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("rf.json")).unwrap()).unwrap();
        assert_eq!(report.as_array().unwrap().len(), 2);
        let data = std::fs::read_to_string(p("d.csv")).unwrap();
        assert_eq!(data.lines().next(), Some("episode,h,o,a,o_next"));
        assert_eq!(data.lines().count(), 1 + 50 * 3);
    }

    #[test]
    fn exit_codes_distinguish_failures() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(dir.path(), "bad.json", r#"{"environment": "riverswim", "algorithm": "ucbvi_prm"}"#);
        let out = dir.path().join("o.csv");
        assert_eq!(lab(&["run", "--config", &bad, "--out", out.to_str().unwrap()]), 2);
        let big = write(
            dir.path(),
            "big.json",
            r#"{"environment": "riverswim", "num_obs": 10, "horizon": 10, "algorithm": "ucbvi_prm", "episodes": 1,
                "reward_free": {"seeds": 1, "trajectories": 1}}"#,
        );
        let refused = lab(&["reward-free", "--config", &big, "--out", out.to_str().unwrap()]);
        assert_eq!(refused, 3);
        let missing = lab(&["run", "--config", "/nonexistent/c.json", "--out", out.to_str().unwrap()]);
        assert_eq!(missing, 1);
    }
}
