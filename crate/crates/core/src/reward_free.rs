//! Reward-free exploration and planning for non-Markovian rewards.
//!
//! Exploration builds, for every observation, a set of policies that try to
//! visit it (a no-regret learner on the indicator reward), forces uniform
//! actions at that observation, and then samples trajectories from the union.
//! Planning fits the empirical kernel and hands it to an exact planner.
//!
//! The exact routines here enumerate trajectories and are meant for tiny
//! instances; they refuse work beyond [`ENUMERATION_LIMIT`] observation
//! sequences.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::cross_product::CrossProductMdp;
use crate::error::{Error, Result};
use crate::labeled_mdp::{rollout_with_rng, Environment, JointPolicy, LabeledMdp};
use crate::reward_machine::{EventAlphabet, RewardMachine};
use crate::rng::{derive_seed, sample_index, seeded, unit};
use crate::ucbvi::{self, AgentHyper, Algorithm, RunOptions};

/// Largest admissible `O^H` for exact enumeration.
pub const ENUMERATION_LIMIT: u128 = 100_000;

/// Refuses instances whose trajectory space is too large to enumerate.
pub fn enumeration_guard(num_obs: usize, num_actions: usize, horizon: usize) -> Result<()> {
    let size = (num_obs as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::Budget { what: "observation sequences", size, limit: ENUMERATION_LIMIT });
    }
    let paths = ((num_obs * num_actions) as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if paths > 100 * ENUMERATION_LIMIT {
        return Err(Error::Budget { what: "trajectories", size: paths, limit: 100 * ENUMERATION_LIMIT });
    }
    Ok(())
}

/// Transition kernel `[o][a][o']` with a fixed initial observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub num_obs: usize,
    pub num_actions: usize,
    pub initial_obs: usize,
    pub p: Vec<f64>,
}

impl Kernel {
    pub fn of(mdp: &LabeledMdp) -> Self {
        Self {
            num_obs: mdp.num_obs(),
            num_actions: mdp.num_actions(),
            initial_obs: mdp.initial_obs(),
            p: mdp.transitions().to_vec(),
        }
    }

    #[inline]
    pub fn row(&self, o: usize, a: usize) -> &[f64] {
        let off = (o * self.num_actions + a) * self.num_obs;
        &self.p[off..off + self.num_obs]
    }

    /// Turns this kernel into a labeled MDP sharing `template`'s labels.
    pub fn to_mdp(&self, template: &LabeledMdp) -> Result<LabeledMdp> {
        LabeledMdp::new(
            self.num_obs,
            self.num_actions,
            template.horizon(),
            self.p.clone(),
            template.labels().to_vec(),
            self.initial_obs,
        )
    }

    /// Largest entrywise gap to another kernel of the same shape.
    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Mixed-radix index of the `(a_h, o_{h+1})` pairs of a trajectory.
pub fn trajectory_index(num_obs: usize, num_actions: usize, pairs: &[(usize, usize)]) -> usize {
    pairs.iter().fold(0, |acc, &(a, o)| acc * num_actions * num_obs + a * num_obs + o)
}

/// A trajectory-dependent reward `F(η)`, `η = (o_1, a_1, …, o_H, a_H, o_{H+1})`.
#[derive(Debug, Clone, PartialEq)]
pub enum NmReward {
    /// Explicit table indexed by [`trajectory_index`] of the `(a, o')` pairs.
    Table { num_obs: usize, num_actions: usize, horizon: usize, values: Vec<f64> },
    /// Expected return of a reward machine reading `labels[o][a][o']`.
    Machine { num_obs: usize, num_actions: usize, horizon: usize, labels: Vec<usize>, rm: RewardMachine },
}

impl NmReward {
    pub fn from_environment(env: &Environment) -> Self {
        NmReward::Machine {
            num_obs: env.mdp.num_obs(),
            num_actions: env.mdp.num_actions(),
            horizon: env.mdp.horizon(),
            labels: env.mdp.labels().to_vec(),
            rm: env.rm.clone(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            NmReward::Table { horizon, .. } | NmReward::Machine { horizon, .. } => *horizon,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            NmReward::Table { num_obs, num_actions, .. } | NmReward::Machine { num_obs, num_actions, .. } => {
                (*num_obs, *num_actions)
            }
        }
    }

    /// `F(η)` for a trajectory from `o_1` through the given `(a, o')` pairs.
    pub fn value(&self, o_1: usize, pairs: &[(usize, usize)]) -> f64 {
        match self {
            NmReward::Table { num_obs, num_actions, values, .. } => {
                values[trajectory_index(*num_obs, *num_actions, pairs)]
            }
            NmReward::Machine { num_obs, num_actions, labels, rm, .. } => {
                let qn = rm.num_states();
                let mut dist = vec![0.0; qn];
                dist[rm.initial_state()] = 1.0;
                let mut next = vec![0.0; qn];
                let mut total = 0.0;
                let mut o = o_1;
                for &(a, o_next) in pairs {
                    let event = labels[(o * num_actions + a) * num_obs + o_next];
                    next.iter_mut().for_each(|x| *x = 0.0);
                    for (q, &d) in dist.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        total += d * rm.expected_reward(q, event);
                        for (q2, &t) in rm.tau_row(q, event).iter().enumerate() {
                            next[q2] += d * t;
                        }
                    }
                    core::mem::swap(&mut dist, &mut next);
                    o = o_next;
                }
                total
            }
        }
    }

    /// `G = max_η F(η)`, by enumeration for machines.
    pub fn upper_bound(&self, initial_obs: usize) -> Result<f64> {
        match self {
            NmReward::Table { values, .. } => Ok(values.iter().copied().fold(0.0, f64::max)),
            NmReward::Machine { num_obs, num_actions, horizon, .. } => {
                enumeration_guard(*num_obs, *num_actions, *horizon)?;
                let mut best: f64 = 0.0;
                let mut pairs = Vec::with_capacity(*horizon);
                all_paths(*num_obs, *num_actions, *horizon, &mut pairs, &mut |p| {
                    best = best.max(self.value(initial_obs, p));
                });
                Ok(best)
            }
        }
    }
}

type PathVisitor<'a> = dyn FnMut(&[(usize, usize)]) + 'a;

fn all_paths(on: usize, an: usize, h: usize, pairs: &mut Vec<(usize, usize)>, f: &mut PathVisitor<'_>) {
    if pairs.len() == h {
        f(pairs);
        return;
    }
    for a in 0..an {
        for o in 0..on {
            pairs.push((a, o));
            all_paths(on, an, h, pairs, f);
            pairs.pop();
        }
    }
}

/// Policy conditioned on the observation history.
///
/// At zero-based step `h` the history `(o_1, a_1, …, o_{h+1})` is encoded by
/// [`trajectory_index`] of its `h` `(a, o')` pairs; `probs[h]` holds an
/// action distribution per history.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPolicy {
    pub num_obs: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub probs: Vec<Vec<f64>>,
}

impl HistoryPolicy {
    /// Deterministic policy from per-step action tables.
    pub fn deterministic(num_obs: usize, num_actions: usize, actions: &[Vec<usize>]) -> Self {
        let probs = actions
            .iter()
            .map(|step| {
                let mut row = vec![0.0; step.len() * num_actions];
                for (i, &a) in step.iter().enumerate() {
                    row[i * num_actions + a] = 1.0;
                }
                row
            })
            .collect();
        Self { num_obs, num_actions, horizon: actions.len(), probs }
    }

    /// Lifts a Markov policy over observations (`num_states = O`).
    pub fn from_markov(policy: &JointPolicy, num_obs: usize, num_actions: usize, horizon: usize, initial_obs: usize) -> Self {
        let mut probs = Vec::with_capacity(horizon);
        let mut tmp = vec![0.0; num_actions];
        for h in 0..horizon {
            let count = (num_obs * num_actions).pow(h as u32);
            let mut row = vec![0.0; count * num_actions];
            for idx in 0..count {
                let o = if h == 0 { initial_obs } else { idx % num_obs };
                policy.action_probs(h, o, &mut tmp);
                row[idx * num_actions..(idx + 1) * num_actions].copy_from_slice(&tmp);
            }
            probs.push(row);
        }
        Self { num_obs, num_actions, horizon, probs }
    }

    #[inline]
    pub fn action_probs(&self, h: usize, history: usize) -> &[f64] {
        &self.probs[h][history * self.num_actions..(history + 1) * self.num_actions]
    }
}

/// A policy returned by a planner.
#[derive(Debug, Clone, PartialEq)]
pub enum NmPolicy {
    /// Markov in the joint state; assumes the machine state is observed.
    Joint(JointPolicy),
    History(HistoryPolicy),
}

/// Visits every trajectory with positive probability under `policy` on
/// `kernel`, calling `leaf(pairs, prob)` and `visit(h, o, a, mass)` for each
/// decision.
fn enumerate<L, V>(kernel: &Kernel, policy: &HistoryPolicy, horizon: usize, mut leaf: L, mut visit: V)
where
    L: FnMut(&[(usize, usize)], f64),
    V: FnMut(usize, usize, usize, f64),
{
    #[allow(clippy::too_many_arguments)]
    fn go<L: FnMut(&[(usize, usize)], f64), V: FnMut(usize, usize, usize, f64)>(
        kernel: &Kernel,
        policy: &HistoryPolicy,
        horizon: usize,
        o: usize,
        history: usize,
        prob: f64,
        pairs: &mut Vec<(usize, usize)>,
        leaf: &mut L,
        visit: &mut V,
    ) {
        let h = pairs.len();
        if h == horizon {
            leaf(pairs, prob);
            return;
        }
        let (on, an) = (kernel.num_obs, kernel.num_actions);
        for (a, &pa) in policy.action_probs(h, history).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            visit(h, o, a, prob * pa);
            for (o_next, &po) in kernel.row(o, a).iter().enumerate() {
                if po == 0.0 {
                    continue;
                }
                pairs.push((a, o_next));
                go(kernel, policy, horizon, o_next, history * an * on + a * on + o_next, prob * pa * po, pairs, leaf, visit);
                pairs.pop();
            }
        }
    }
    let mut pairs = Vec::with_capacity(horizon);
    go(kernel, policy, horizon, kernel.initial_obs, 0, 1.0, &mut pairs, &mut leaf, &mut visit);
}

/// Exact `J(π) = E[F(η)]` of a history policy by enumeration.
pub fn expected_return(kernel: &Kernel, policy: &HistoryPolicy, reward: &NmReward) -> Result<f64> {
    let horizon = reward.horizon();
    enumeration_guard(kernel.num_obs, kernel.num_actions, horizon)?;
    let mut j = 0.0;
    enumerate(kernel, policy, horizon, |pairs, prob| j += prob * reward.value(kernel.initial_obs, pairs), |_, _, _, _| {});
    Ok(j)
}

/// Exact value of any planner output on `kernel`.
pub fn evaluate(kernel: &Kernel, policy: &NmPolicy, reward: &NmReward) -> Result<f64> {
    match policy {
        NmPolicy::History(hp) => expected_return(kernel, hp, reward),
        NmPolicy::Joint(jp) => {
            let NmReward::Machine { horizon, labels, rm, .. } = reward else {
                return Err(Error::usage("joint-state policies need a reward machine"));
            };
            let mdp = LabeledMdp::new(kernel.num_obs, kernel.num_actions, *horizon, kernel.p.clone(), labels.clone(), kernel.initial_obs)?;
            let env = Environment::new(mdp, rm.clone(), placeholder_alphabet(rm.num_events()))?;
            let cp = CrossProductMdp::build(&env);
            Ok(cp.policy_evaluation(jp)?.value(0, cp.initial_state()))
        }
    }
}

/// Alphabet with `n` anonymous events, for machines supplied without one.
pub fn placeholder_alphabet(n: usize) -> EventAlphabet {
    let mut a = EventAlphabet::new();
    for i in 1..n {
        a.insert([alloc::format!("e{i}")]);
    }
    a
}

/// Both sides of the simulation bound for `policy`:
/// `lhs = |Ĵ(π) − J(π)|` and
/// `rhs = Σ_m Σ_{o,a,o'} |p̂(o'|o,a) − p(o'|o,a)|·μ_m(o,a)·G`, with `μ_m`
/// taken under `p`.
pub fn simulation_gap(p: &Kernel, p_hat: &Kernel, policy: &HistoryPolicy, reward: &NmReward) -> Result<(f64, f64)> {
    let horizon = reward.horizon();
    enumeration_guard(p.num_obs, p.num_actions, horizon)?;
    let j = expected_return(p, policy, reward)?;
    let j_hat = expected_return(p_hat, policy, reward)?;
    let g = reward.upper_bound(p.initial_obs)?;
    let (on, an) = (p.num_obs, p.num_actions);
    let mut mu = vec![0.0; horizon * on * an];
    enumerate(p, policy, horizon, |_, _| {}, |h, o, a, mass| mu[(h * on + o) * an + a] += mass);
    let mut rhs = 0.0;
    for h in 0..horizon {
        for o in 0..on {
            for a in 0..an {
                let m = mu[(h * on + o) * an + a];
                if m == 0.0 {
                    continue;
                }
                let eps: f64 = p.row(o, a).iter().zip(p_hat.row(o, a)).map(|(x, y)| (x - y).abs()).sum();
                rhs += eps * m * g;
            }
        }
    }
    Ok(((j_hat - j).abs(), rhs))
}

/// Optimal history-dependent policy by backward induction over histories.
/// Returns the policy and its value.
pub fn history_dp_planner(kernel: &Kernel, reward: &NmReward) -> Result<(HistoryPolicy, f64)> {
    let horizon = reward.horizon();
    if reward.shape() != (kernel.num_obs, kernel.num_actions) {
        return Err(Error::usage("reward and kernel disagree on observation or action counts"));
    }
    enumeration_guard(kernel.num_obs, kernel.num_actions, horizon)?;
    let (on, an) = (kernel.num_obs, kernel.num_actions);
    let branch = on * an;

    // values over complete trajectories
    let leaves = branch.pow(horizon as u32);
    let mut next_values = vec![0.0; leaves];
    let mut pairs = Vec::with_capacity(horizon);
    let mut idx = 0;
    all_paths(on, an, horizon, &mut pairs, &mut |p| {
        next_values[idx] = reward.value(kernel.initial_obs, p);
        idx += 1;
    });

    let mut actions: Vec<Vec<usize>> = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        let count = branch.pow(h as u32);
        let mut values = vec![0.0; count];
        let mut step_actions = vec![0; count];
        for hist in 0..count {
            let o = if h == 0 { kernel.initial_obs } else { hist % on };
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..an {
                let v: f64 = kernel
                    .row(o, a)
                    .iter()
                    .enumerate()
                    .map(|(o_next, &po)| po * next_values[hist * branch + a * on + o_next])
                    .sum();
                if v > best {
                    best = v;
                    best_a = a;
                }
            }
            values[hist] = best;
            step_actions[hist] = best_a;
        }
        actions[h] = step_actions;
        next_values = values;
    }
    Ok((HistoryPolicy::deterministic(on, an, &actions), next_values[0]))
}

/// `max_π P(o is visited at some step 1..H)`, via the absorbing-on-hit
/// transform and backward induction.
pub fn max_reach_probability(mdp: &LabeledMdp, target: usize) -> f64 {
    reach_values(mdp, target, |vals| vals.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Probability that `policy` (Markov over observations) visits `target`.
pub fn reach_probability(mdp: &LabeledMdp, policy: &JointPolicy, target: usize) -> f64 {
    if let JointPolicy::Mixture(parts) = policy {
        return parts.iter().map(|(w, p)| w * reach_probability(mdp, p, target)).sum();
    }
    let (on, an, hn) = (mdp.num_obs(), mdp.num_actions(), mdp.horizon());
    let mut v = vec![0.0; on];
    let mut probs = vec![0.0; an];
    for h in (0..hn).rev() {
        let mut cur = vec![0.0; on];
        for (o, slot) in cur.iter_mut().enumerate() {
            if o == target {
                *slot = 1.0;
                continue;
            }
            policy.action_probs(h, o, &mut probs);
            *slot = (0..an)
                .map(|a| probs[a] * mdp.p_row(o, a).iter().zip(&v).map(|(p, x)| p * x).sum::<f64>())
                .sum();
        }
        v = cur;
    }
    v[mdp.initial_obs()]
}

fn reach_values(mdp: &LabeledMdp, target: usize, combine: impl Fn(&[f64]) -> f64) -> f64 {
    let (on, an, hn) = (mdp.num_obs(), mdp.num_actions(), mdp.horizon());
    let mut v = vec![0.0; on];
    let mut per_action = vec![0.0; an];
    for _ in (0..hn).rev() {
        let mut cur = vec![0.0; on];
        for (o, out) in cur.iter_mut().enumerate() {
            if o == target {
                *out = 1.0;
                continue;
            }
            for (a, slot) in per_action.iter_mut().enumerate() {
                *slot = mdp.p_row(o, a).iter().zip(&v).map(|(p, x)| p * x).sum();
            }
            *out = combine(&per_action);
        }
        v = cur;
    }
    v[mdp.initial_obs()]
}

/// Settings for the visitation learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploreConfig {
    /// Episodes of the learner per target observation.
    pub episodes_per_target: usize,
    /// Exploration coefficient of the learner.
    pub gamma: f64,
    pub rho: f64,
    pub doubling: bool,
}

impl ExploreConfig {
    pub fn new(episodes_per_target: usize) -> Self {
        Self { episodes_per_target, gamma: 0.1, rho: 0.05, doubling: true }
    }
}

/// Indicator-reward environment for `target`: reward 1 whenever the current
/// observation is `target`.
fn indicator_environment(mdp: &LabeledMdp, target: usize) -> Result<Environment> {
    let (on, an) = (mdp.num_obs(), mdp.num_actions());
    let labels: Vec<usize> = (0..on * an * on).map(|i| usize::from(i / (an * on) == target)).collect();
    let mdp = LabeledMdp::new(on, an, mdp.horizon(), mdp.transitions().to_vec(), labels, mdp.initial_obs())?;
    let mut alphabet = EventAlphabet::new();
    alphabet.insert(["at_target"]);
    Environment::new(mdp, RewardMachine::constant_rewards(&[0.0, 1.0]), alphabet)
}

/// Replaces the action distribution at `target` with uniform at every step.
pub fn uniform_at(policy: &JointPolicy, target: usize, num_obs: usize, num_actions: usize, horizon: usize) -> JointPolicy {
    let mut probs = vec![0.0; horizon * num_obs * num_actions];
    let mut tmp = vec![0.0; num_actions];
    for h in 0..horizon {
        for o in 0..num_obs {
            let row = &mut probs[(h * num_obs + o) * num_actions..][..num_actions];
            if o == target {
                row.iter_mut().for_each(|x| *x = 1.0 / num_actions as f64);
            } else {
                policy.action_probs(h, o, &mut tmp);
                row.copy_from_slice(&tmp);
            }
        }
    }
    JointPolicy::Stochastic { num_states: num_obs, num_actions, probs }
}

/// Policies of the learner on the indicator reward of `target`, one per
/// episode (grouped with multiplicities), each made uniform at `target`.
pub fn visitation_policies(mdp: &LabeledMdp, target: usize, config: &ExploreConfig, seed: u64) -> Result<Vec<(usize, JointPolicy)>> {
    if config.episodes_per_target == 0 {
        return Err(Error::usage("at least one learner episode per target is required"));
    }
    let env = indicator_environment(mdp, target)?;
    let hyper = AgentHyper::new(config.rho, config.gamma, config.episodes_per_target, config.doubling)?;
    let mut groups: Vec<(usize, JointPolicy)> = Vec::new();
    ucbvi::run_observed(&env, Algorithm::UcbviCp, hyper, seed, RunOptions::default(), |agent, record| {
        if record.replanned || groups.is_empty() {
            groups.push((0, agent.greedy_policy()));
        }
        groups.last_mut().expect("group exists").0 += 1;
    });
    let (on, an, hn) = (mdp.num_obs(), mdp.num_actions(), mdp.horizon());
    Ok(groups.into_iter().map(|(n, p)| (n, uniform_at(&p, target, on, an, hn))).collect())
}

/// Trajectories collected without rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationDataset {
    pub num_obs: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Each entry is `H` transitions `(o, a, o')`.
    pub trajectories: Vec<Vec<(usize, usize, usize)>>,
    /// Sampling mixture Ψ with weights.
    pub policies: Vec<(f64, JointPolicy)>,
}

impl ExplorationDataset {
    pub fn counts(&self) -> Vec<u64> {
        let (on, an) = (self.num_obs, self.num_actions);
        let mut n = vec![0u64; on * an * on];
        for t in &self.trajectories {
            for &(o, a, o2) in t {
                n[(o * an + a) * on + o2] += 1;
            }
        }
        n
    }

    /// Empirical kernel; unvisited `(o,a)` rows become self-loops.
    pub fn empirical_kernel(&self, initial_obs: usize) -> Kernel {
        let (on, an) = (self.num_obs, self.num_actions);
        let n = self.counts();
        let mut p = vec![0.0; on * an * on];
        for o in 0..on {
            for a in 0..an {
                let row = &n[(o * an + a) * on..][..on];
                let total: u64 = row.iter().sum();
                let out = &mut p[(o * an + a) * on..][..on];
                if total == 0 {
                    out[o] = 1.0;
                } else {
                    for (x, &c) in out.iter_mut().zip(row) {
                        *x = c as f64 / total as f64;
                    }
                }
            }
        }
        Kernel { num_obs: on, num_actions: an, initial_obs, p }
    }

    /// Empirical `λ(o,a)`: visits per trajectory, summed over steps.
    pub fn empirical_lambda(&self) -> Vec<f64> {
        let (on, an) = (self.num_obs, self.num_actions);
        let mut lambda = vec![0.0; on * an];
        for t in &self.trajectories {
            for &(o, a, _) in t {
                lambda[o * an + a] += 1.0;
            }
        }
        let n = self.trajectories.len().max(1) as f64;
        lambda.iter_mut().for_each(|x| *x /= n);
        lambda
    }
}

/// Builds Ψ from every observation's visitation policies and samples
/// `num_trajectories` episodes, each from a freshly drawn member of Ψ.
pub fn explore(mdp: &LabeledMdp, config: &ExploreConfig, num_trajectories: usize, seed: u64) -> Result<ExplorationDataset> {
    let (on, an, hn) = (mdp.num_obs(), mdp.num_actions(), mdp.horizon());
    let mut weighted: Vec<(f64, JointPolicy)> = Vec::new();
    let total = (config.episodes_per_target * on) as f64;
    for target in 0..on {
        for (count, policy) in visitation_policies(mdp, target, config, derive_seed(seed, target as u64))? {
            weighted.push((count as f64 / total, policy));
        }
    }
    let rm = RewardMachine::trivial(mdp.labels().iter().copied().max().unwrap_or(0) + 1);
    let mut rng = seeded(derive_seed(seed, u64::MAX));
    let weights: Vec<f64> = weighted.iter().map(|(w, _)| *w).collect();
    let mut trajectories = Vec::with_capacity(num_trajectories);
    for _ in 0..num_trajectories {
        let policy = &weighted[sample_index(&weights, unit(&mut rng))].1;
        let traj = rollout_with_rng(mdp, &rm, policy, &mut rng);
        trajectories.push(traj.steps.iter().map(|s| (s.o, s.a, s.o_next)).collect());
    }
    Ok(ExplorationDataset { num_obs: on, num_actions: an, horizon: hn, trajectories, policies: weighted })
}

/// Exact planners with zero optimization error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planner {
    /// Value iteration on the product with the reward machine.
    CrossProduct,
    /// Backward induction over histories.
    HistoryDp,
}

impl Planner {
    /// Optimization error `α` of the planner.
    pub fn alpha(self) -> f64 {
        0.0
    }

    pub fn plan(self, kernel: &Kernel, reward: &NmReward) -> Result<NmPolicy> {
        match self {
            Planner::HistoryDp => Ok(NmPolicy::History(history_dp_planner(kernel, reward)?.0)),
            Planner::CrossProduct => {
                let NmReward::Machine { horizon, labels, rm, .. } = reward else {
                    return Err(Error::usage("the product planner needs a reward machine"));
                };
                let mdp = LabeledMdp::new(kernel.num_obs, kernel.num_actions, *horizon, kernel.p.clone(), labels.clone(), kernel.initial_obs)?;
                let env = Environment::new(mdp, rm.clone(), placeholder_alphabet(rm.num_events()))?;
                Ok(NmPolicy::Joint(CrossProductMdp::build(&env).value_iteration().greedy_policy()))
            }
        }
    }
}

/// Fits `p̂` from the dataset and plans on it.
pub fn plan(dataset: &ExplorationDataset, initial_obs: usize, reward: &NmReward, planner: Planner) -> Result<(NmPolicy, Kernel)> {
    if reward.horizon() != dataset.horizon {
        return Err(Error::usage(alloc::format!(
            "reward horizon {} differs from dataset horizon {}",
            reward.horizon(),
            dataset.horizon
        )));
    }
    let kernel = dataset.empirical_kernel(initial_obs);
    Ok((planner.plan(&kernel, reward)?, kernel))
}

/// Optimality gap `J(π*) − J(π̂)` on the true kernel, with `π*` from the
/// same planner class.
pub fn optimality_gap(truth: &Kernel, planned: &NmPolicy, reward: &NmReward, planner: Planner) -> Result<f64> {
    let best = planner.plan(truth, reward)?;
    Ok(evaluate(truth, &best, reward)? - evaluate(truth, planned, reward)?)
}

/// Every deterministic Markov policy over observations, `A^(O·H)` of them.
pub fn markov_policies(num_obs: usize, num_actions: usize, horizon: usize) -> Result<impl Iterator<Item = JointPolicy>> {
    let cells = num_obs * horizon;
    let count = (num_actions as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    if count > 100 * ENUMERATION_LIMIT {
        return Err(Error::Budget { what: "deterministic Markov policies", size: count, limit: 100 * ENUMERATION_LIMIT });
    }
    Ok((0..count as usize).map(move |mut code| {
        let mut actions = vec![0; cells];
        for slot in actions.iter_mut() {
            *slot = code % num_actions;
            code /= num_actions;
        }
        JointPolicy::deterministic(num_obs, actions)
    }))
}

/// Random history policy, deterministic if `deterministic`.
pub fn random_history_policy<R: Rng + ?Sized>(num_obs: usize, num_actions: usize, horizon: usize, deterministic: bool, rng: &mut R) -> HistoryPolicy {
    let mut probs = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let count = (num_obs * num_actions).pow(h as u32);
        let mut row = vec![0.0; count * num_actions];
        for chunk in row.chunks_mut(num_actions) {
            if deterministic {
                chunk[rng.gen_range(0..num_actions)] = 1.0;
            } else {
                chunk.iter_mut().for_each(|x| *x = unit(rng) + 1e-3);
                let s: f64 = chunk.iter().sum();
                chunk.iter_mut().for_each(|x| *x /= s);
            }
        }
        probs.push(row);
    }
    HistoryPolicy { num_obs, num_actions, horizon, probs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(right: f64, horizon: usize) -> LabeledMdp {
        LabeledMdp::new(2, 1, horizon, vec![1.0 - right, right, 0.0, 1.0], vec![0; 4], 0).unwrap()
    }

    #[test]
    fn reach_probability_examples() {
        let m = chain(0.3, 2);
        assert_eq!(max_reach_probability(&m, 0), 1.0);
        assert!((max_reach_probability(&m, 1) - 0.3).abs() < 1e-15);
        // o0 unreachable from o1
        let m = LabeledMdp::new(2, 1, 3, vec![0.0, 1.0, 0.0, 1.0], vec![0; 4], 1).unwrap();
        assert_eq!(max_reach_probability(&m, 0), 0.0);
    }

    #[test]
    fn one_step_simulation_gap() {
        let p = Kernel { num_obs: 2, num_actions: 1, initial_obs: 0, p: vec![0.5, 0.5, 0.0, 1.0] };
        let p_hat = Kernel { p: vec![0.4, 0.6, 0.0, 1.0], ..p.clone() };
        let reward = NmReward::Table { num_obs: 2, num_actions: 1, horizon: 1, values: vec![0.0, 1.0] };
        let policy = HistoryPolicy::deterministic(2, 1, &[vec![0]]);
        let (lhs, rhs) = simulation_gap(&p, &p_hat, &policy, &reward).unwrap();
        assert!((lhs - 0.1).abs() < 1e-12);
        // both next-observation entries differ by 0.1
        assert!((rhs - 0.2).abs() < 1e-12);
        let (lhs, rhs) = simulation_gap(&p, &p, &policy, &reward).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn one_step_planner_takes_best_action() {
        let p = Kernel { num_obs: 2, num_actions: 2, initial_obs: 0, p: vec![0.9, 0.1, 0.2, 0.8, 0.0, 1.0, 0.0, 1.0] };
        let values = vec![0.0, 1.0, 0.0, 1.0];
        let reward = NmReward::Table { num_obs: 2, num_actions: 2, horizon: 1, values };
        let (pol, v) = history_dp_planner(&p, &reward).unwrap();
        assert_eq!(pol.action_probs(0, 0), &[0.0, 1.0]);
        assert!((v - 0.8).abs() < 1e-15);
    }

    #[test]
    fn large_instances_are_refused() {
        assert!(matches!(enumeration_guard(10, 2, 6), Err(Error::Budget { .. })));
        assert!(enumeration_guard(3, 2, 4).is_ok());
    }

    #[test]
    fn empty_dataset_plans_on_self_loops() {
        let ds = ExplorationDataset { num_obs: 2, num_actions: 1, horizon: 2, trajectories: Vec::new(), policies: Vec::new() };
        let k = ds.empirical_kernel(0);
        assert_eq!(k.p, vec![1.0, 0.0, 0.0, 1.0]);
        let reward = NmReward::Table { num_obs: 2, num_actions: 1, horizon: 3, values: vec![0.0; 8] };
        assert!(plan(&ds, 0, &reward, Planner::HistoryDp).is_err());
    }

    #[test]
    fn markov_policy_enumeration_size() {
        assert_eq!(markov_policies(2, 2, 2).unwrap().count(), 16);
    }
}
