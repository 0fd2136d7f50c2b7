//! Comparison agents.
//!
//! * `ucbvi_cp`: UCBVI with counts kept on joint states. It reuses the
//!   UCBVI-PRM machinery under a single-state reward table, so the bonus is
//!   the joint-space instance of the same formula.
//! * `ucrl2_rm_l` / `ucrl2_rm_b`: episodic optimistic backups over L1-ball
//!   and per-entry Bernstein confidence sets on the observation kernel.

use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::labeled_mdp::Environment;
use crate::reward_machine::RewardMachine;
use crate::ucbvi::{self, AgentHyper, Algorithm, AgentModel, RunLog};

/// Agent model over joint states for UCBVI on the product MDP.
///
/// Observations are joint states `s = q·O + o`. Each joint transition is
/// labeled with the index of the reward it pays, and a single-state machine
/// pays that reward, so realized rewards are reproduced exactly.
pub fn cross_product_model(env: &Environment) -> AgentModel {
    let mdp = &env.mdp;
    let rm = &env.rm;
    let (on, an, qn) = (mdp.num_obs(), mdp.num_actions(), rm.num_states());
    let sn = qn * on;
    let mut values: Vec<f64> = Vec::new();
    let mut labels = vec![0usize; sn * an * sn];
    let index_of = |r: f64, values: &mut Vec<f64>| match values.iter().position(|&x| x == r) {
        Some(i) => i,
        None => {
            values.push(r);
            values.len() - 1
        }
    };
    for q in 0..qn {
        for o in 0..on {
            let s = q * on + o;
            for a in 0..an {
                for o_next in 0..on {
                    let event = mdp.label(o, a, o_next);
                    for q_next in 0..qn {
                        let s_next = q_next * on + o_next;
                        let reward = if mdp.p(o, a, o_next) > 0.0 && rm.tau(q, event, q_next) > 0.0 {
                            rm.nu(q, event, q_next)
                        } else {
                            0.0
                        };
                        labels[(s * an + a) * sn + s_next] = index_of(reward, &mut values);
                    }
                }
            }
        }
    }
    AgentModel {
        num_obs: sn,
        num_actions: an,
        horizon: mdp.horizon(),
        labels,
        rm: RewardMachine::constant_rewards(&values),
    }
}

/// Runs UCBVI on the product MDP.
pub fn ucbvi_cp_agent(env: &Environment, hyper: AgentHyper, seed: u64) -> RunLog {
    ucbvi::run(env, Algorithm::UcbviCp, hyper, seed)
}

pub fn ucrl2_rm_l_agent(env: &Environment, hyper: AgentHyper, seed: u64) -> RunLog {
    ucbvi::run(env, Algorithm::Ucrl2RmL, hyper, seed)
}

pub fn ucrl2_rm_b_agent(env: &Environment, hyper: AgentHyper, seed: u64) -> RunLog {
    ucbvi::run(env, Algorithm::Ucrl2RmB, hyper, seed)
}

/// Confidence set around an empirical next-observation distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceSet {
    L1Ball { center: Vec<f64>, radius: f64 },
    PerEntry { center: Vec<f64>, half_widths: Vec<f64> },
}

impl ConfidenceSet {
    pub fn center(&self) -> &[f64] {
        match self {
            ConfidenceSet::L1Ball { center, .. } | ConfidenceSet::PerEntry { center, .. } => center,
        }
    }

    pub fn contains(&self, dist: &[f64], slack: f64) -> bool {
        let mass: f64 = dist.iter().sum();
        if (mass - 1.0).abs() > slack || dist.iter().any(|&x| x < -slack) {
            return false;
        }
        match self {
            ConfidenceSet::L1Ball { center, radius } => {
                center.iter().zip(dist).map(|(c, d)| (c - d).abs()).sum::<f64>() <= radius + slack
            }
            ConfidenceSet::PerEntry { center, half_widths } => center
                .iter()
                .zip(half_widths)
                .zip(dist)
                .all(|((c, w), d)| (d - c).abs() <= w + slack),
        }
    }

    /// Largest expectation of `values` over the set.
    pub fn optimistic_backup(&self, values: &[f64]) -> OptimisticBackup {
        match self {
            ConfidenceSet::L1Ball { center, radius } => optimistic_l1_backup(center, values, *radius),
            ConfidenceSet::PerEntry { center, half_widths } => optimistic_box_backup(center, values, half_widths),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticBackup {
    pub distribution: Vec<f64>,
    pub value: f64,
}

/// Indices sorted by `values` descending, ties by index.
fn order_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}

/// Maximizes `Σ p'·values` over `‖p' − p̂‖₁ ≤ radius`.
///
/// Moves up to `radius/2` mass onto the best entry and takes it from the
/// worst entries first.
pub fn optimistic_l1_backup(p_hat: &[f64], values: &[f64], radius: f64) -> OptimisticBackup {
    let mut dist = p_hat.to_vec();
    if dist.is_empty() {
        return OptimisticBackup { distribution: dist, value: 0.0 };
    }
    let order = order_desc(values);
    let best = order[0];
    let added = (radius.max(0.0) / 2.0).min(1.0 - dist[best]);
    dist[best] += added;
    let mut excess = added;
    for &i in order.iter().rev() {
        if excess <= 0.0 || i == best {
            continue;
        }
        let take = dist[i].min(excess);
        dist[i] -= take;
        excess -= take;
    }
    let value = dist.iter().zip(values).map(|(p, v)| p * v).sum();
    OptimisticBackup { distribution: dist, value }
}

/// Maximizes `Σ p'·values` over the simplex intersected with the box
/// `|p'(o) − p̂(o)| ≤ half_widths[o]`.
///
/// Entries in descending-value order are raised to their upper bounds; the
/// surplus is then removed from ascending-value entries down to their lower
/// bounds.
pub fn optimistic_box_backup(p_hat: &[f64], values: &[f64], half_widths: &[f64]) -> OptimisticBackup {
    let upper: Vec<f64> = p_hat.iter().zip(half_widths).map(|(p, w)| (p + w).min(1.0)).collect();
    let lower: Vec<f64> = p_hat.iter().zip(half_widths).map(|(p, w)| (p - w).max(0.0)).collect();
    let order = order_desc(values);
    let mut dist = lower.clone();
    let mut free = 1.0 - lower.iter().sum::<f64>();
    for &i in &order {
        if free <= 0.0 {
            break;
        }
        let raise = (upper[i] - dist[i]).min(free);
        dist[i] += raise;
        free -= raise;
    }
    let value = dist.iter().zip(values).map(|(p, v)| p * v).sum();
    OptimisticBackup { distribution: dist, value }
}

/// `β_L(o,a) = √(14·O·ln(2AT/ρ) / max(1, N(o,a)))`.
pub fn l1_radius(num_obs: usize, num_actions: usize, total_steps: usize, rho: f64, n: u64) -> f64 {
    let log_term = log(2.0 * num_actions as f64 * total_steps as f64 / rho);
    sqrt(14.0 * num_obs as f64 * log_term / n.max(1) as f64)
}

/// Per-entry Bernstein half-widths
/// `√(2·p̂(1−p̂)·ℓ/N) + 2ℓ/(3N)` with `ℓ = ln(6·O·A·T/ρ)`.
pub fn bernstein_widths(p_hat: &[f64], n: u64, num_obs: usize, num_actions: usize, total_steps: usize, rho: f64, out: &mut [f64]) {
    let ell = log(6.0 * num_obs as f64 * num_actions as f64 * total_steps as f64 / rho);
    let n = n.max(1) as f64;
    for (w, &p) in out.iter_mut().zip(p_hat) {
        *w = sqrt(2.0 * p * (1.0 - p) * ell / n) + 2.0 * ell / (3.0 * n);
    }
}
