//! UCBVI-PRM and the episodic driver shared with the baseline agents.
//!
//! The agent keeps transition counts over observations only. The reward
//! machine is known, so the optimistic backup works through
//! `W(q,o,a,o') = Σ_q' τ(q'|q,L(o,a,o'))·V(q',o')` and its variance under the
//! empirical kernel drives a Bernstein-style bonus.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::baselines::{self, bernstein_widths, l1_radius, optimistic_box_backup, optimistic_l1_backup};
use crate::cross_product::CrossProductMdp;
use crate::error::{Error, Result};
use crate::labeled_mdp::{Environment, JointPolicy, Trajectory};
use crate::reward_machine::RewardMachine;
use crate::rng::seeded;

/// Power of `H` in the clipped term of the bonus numerator `100²·H^k·O²·A·ι²`.
pub const MIN_TERM_HORIZON_POWER: i32 = 3;

/// Which of the four agents to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Algorithm {
    UcbviPrm,
    UcbviCp,
    Ucrl2RmL,
    Ucrl2RmB,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::UcbviPrm, Algorithm::UcbviCp, Algorithm::Ucrl2RmL, Algorithm::Ucrl2RmB];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::UcbviPrm => "ucbvi_prm",
            Algorithm::UcbviCp => "ucbvi_cp",
            Algorithm::Ucrl2RmL => "ucrl2_rm_l",
            Algorithm::Ucrl2RmB => "ucrl2_rm_b",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Tuned exploration coefficient used for experiments.
    pub fn default_gamma(self) -> f64 {
        match self {
            Algorithm::UcbviPrm | Algorithm::UcbviCp => 0.001,
            Algorithm::Ucrl2RmL => 0.5,
            Algorithm::Ucrl2RmB => 0.1,
        }
    }

    /// Candidate exploration coefficients for tuning sweeps.
    pub fn gamma_candidates(self) -> &'static [f64] {
        match self {
            Algorithm::UcbviPrm | Algorithm::UcbviCp => &[0.001, 0.01, 0.1, 0.5, 1.0, 2.0],
            Algorithm::Ucrl2RmL => &[0.1, 0.25, 0.5, 0.75, 1.0, 2.0],
            Algorithm::Ucrl2RmB => &[0.01, 0.1, 0.5, 0.75, 1.0, 2.0],
        }
    }

    fn view(self) -> StateView {
        match self {
            Algorithm::UcbviCp => StateView::Joint,
            _ => StateView::Observation,
        }
    }

    fn optimism(self) -> Optimism {
        match self {
            Algorithm::UcbviPrm | Algorithm::UcbviCp => Optimism::Bonus,
            Algorithm::Ucrl2RmL => Optimism::L1Ball,
            Algorithm::Ucrl2RmB => Optimism::Bernstein,
        }
    }
}

/// How the agent sees the environment state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StateView {
    /// Counts over observations; the machine state is tracked exactly.
    Observation,
    /// Counts over joint states under a single-state reward table.
    Joint,
}

/// Source of optimism in the backup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Optimism {
    /// Reward bonus, with the min against previous estimates.
    Bonus,
    /// Best kernel in an L1 ball around the empirical one.
    L1Ball,
    /// Best kernel in per-entry Bernstein intervals.
    Bernstein,
}

/// What the agent knows up front: labels over its observation space and the
/// reward machine. The transition kernel is learned.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentModel {
    pub num_obs: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// `[o][a][o']`
    pub labels: Vec<usize>,
    pub rm: RewardMachine,
}

impl AgentModel {
    pub fn observation_level(env: &Environment) -> Self {
        Self {
            num_obs: env.mdp.num_obs(),
            num_actions: env.mdp.num_actions(),
            horizon: env.mdp.horizon(),
            labels: env.mdp.labels().to_vec(),
            rm: env.rm.clone(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.rm.num_states() * self.num_obs
    }

    #[inline]
    pub fn label_row(&self, o: usize, a: usize) -> &[usize] {
        let off = (o * self.num_actions + a) * self.num_obs;
        &self.labels[off..off + self.num_obs]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentHyper {
    /// Failure probability ρ.
    pub rho: f64,
    /// Exploration coefficient γ scaling the bonus or the confidence radius.
    pub gamma: f64,
    /// Number of episodes K; fixes `T = K·H` inside ι.
    pub episodes: usize,
    /// Replan only when some count reaches a power of two.
    pub doubling: bool,
}

impl AgentHyper {
    pub fn new(rho: f64, gamma: f64, episodes: usize, doubling: bool) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::usage(format!("rho must lie in (0,1), got {rho}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::usage(format!("gamma must be a nonnegative number, got {gamma}")));
        }
        if episodes == 0 {
            return Err(Error::usage("at least one episode is required"));
        }
        Ok(Self { rho, gamma, episodes, doubling })
    }

    /// γ = 1: the bonus exactly as analysed.
    pub fn theory(episodes: usize) -> Self {
        Self { rho: 0.05, gamma: 1.0, episodes, doubling: true }
    }

    /// γ = 0.001: the tuned coefficient used for experiments.
    pub fn experiment(episodes: usize) -> Self {
        Self { rho: 0.05, gamma: 0.001, episodes, doubling: true }
    }
}

/// `ι = ln(6·Q·O·A·T/ρ)`.
pub fn iota(num_rm_states: usize, num_obs: usize, num_actions: usize, total_steps: usize, rho: f64) -> f64 {
    log(6.0 * num_rm_states as f64 * num_obs as f64 * num_actions as f64 * total_steps as f64 / rho)
}

/// Visit counts over observations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountStore {
    num_obs: usize,
    num_actions: usize,
    horizon: usize,
    /// `N(o,a,z)`
    n3: Vec<u64>,
    /// `N(o,a)`
    n2: Vec<u64>,
    /// `N'_h(o,a)`, `H` rows.
    nh2: Vec<u64>,
    /// `N'_h(o)`, `H+1` rows; the last row counts terminal observations.
    nh1: Vec<u64>,
}

impl CountStore {
    pub fn new(num_obs: usize, num_actions: usize, horizon: usize) -> Self {
        Self {
            num_obs,
            num_actions,
            horizon,
            n3: vec![0; num_obs * num_actions * num_obs],
            n2: vec![0; num_obs * num_actions],
            nh2: vec![0; horizon * num_obs * num_actions],
            nh1: vec![0; (horizon + 1) * num_obs],
        }
    }

    /// Records one transition at zero-based step `h`. Returns true when
    /// `N(o,a)` reaches a power of two.
    pub fn record(&mut self, h: usize, o: usize, a: usize, o_next: usize) -> Result<bool> {
        let (on, an) = (self.num_obs, self.num_actions);
        if h >= self.horizon || o >= on || o_next >= on || a >= an {
            return Err(Error::usage(format!(
                "transition (h={h}, o={o}, a={a}, o'={o_next}) outside a {on}x{an} store with horizon {}",
                self.horizon
            )));
        }
        self.n3[(o * an + a) * on + o_next] += 1;
        let n = &mut self.n2[o * an + a];
        *n += 1;
        let hit = n.is_power_of_two();
        self.nh2[(h * on + o) * an + a] += 1;
        self.nh1[h * on + o] += 1;
        if h + 1 == self.horizon {
            self.nh1[self.horizon * on + o_next] += 1;
        }
        Ok(hit)
    }

    /// Ingests an observation-level trajectory.
    pub fn ingest_trajectory(&mut self, traj: &Trajectory) -> Result<bool> {
        if traj.len() != self.horizon {
            return Err(Error::usage(format!(
                "trajectory of length {} for horizon {}",
                traj.len(),
                self.horizon
            )));
        }
        let mut hit = false;
        for s in &traj.steps {
            hit |= self.record(s.h, s.o, s.a, s.o_next)?;
        }
        Ok(hit)
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn n(&self, o: usize, a: usize) -> u64 {
        self.n2[o * self.num_actions + a]
    }

    #[inline]
    pub fn n_next(&self, o: usize, a: usize, z: usize) -> u64 {
        self.n3[(o * self.num_actions + a) * self.num_obs + z]
    }

    /// `N'_h(o,a)`, zero-based `h < H`.
    #[inline]
    pub fn n_step(&self, h: usize, o: usize, a: usize) -> u64 {
        self.nh2[(h * self.num_obs + o) * self.num_actions + a]
    }

    /// `N'_h(o)`, zero-based `h ≤ H`.
    #[inline]
    pub fn n_step_obs(&self, h: usize, o: usize) -> u64 {
        self.nh1[h * self.num_obs + o]
    }

    #[inline]
    fn step_obs_row(&self, h: usize) -> &[u64] {
        &self.nh1[h * self.num_obs..(h + 1) * self.num_obs]
    }

    pub fn total(&self) -> u64 {
        self.n2.iter().sum()
    }

    /// Checks `N(o,a) = Σ_z N(o,a,z)`, `Σ_h N'_h(o,a) = N(o,a)` and
    /// `N'_h(o) = Σ_a N'_h(o,a)`.
    pub fn identities_hold(&self) -> bool {
        let (on, an) = (self.num_obs, self.num_actions);
        for o in 0..on {
            for a in 0..an {
                let by_next: u64 = (0..on).map(|z| self.n_next(o, a, z)).sum();
                let by_step: u64 = (0..self.horizon).map(|h| self.n_step(h, o, a)).sum();
                if by_next != self.n(o, a) || by_step != self.n(o, a) {
                    return false;
                }
            }
        }
        (0..self.horizon).all(|h| (0..on).all(|o| (0..an).map(|a| self.n_step(h, o, a)).sum::<u64>() == self.n_step_obs(h, o)))
    }

    /// Empirical kernel on the known set `{(o,a) : N(o,a) ≥ 1}`.
    pub fn empirical_model(&self) -> EmpiricalModel {
        let (on, an) = (self.num_obs, self.num_actions);
        let mut p_hat = vec![0.0; on * an * on];
        let mut known = vec![false; on * an];
        for oa in 0..on * an {
            let n = self.n2[oa];
            if n == 0 {
                continue;
            }
            known[oa] = true;
            let inv = n as f64;
            for z in 0..on {
                p_hat[oa * on + z] = self.n3[oa * on + z] as f64 / inv;
            }
        }
        EmpiricalModel { num_obs: on, num_actions: an, p_hat, known }
    }
}

/// `p̂(z|o,a) = N(o,a,z)/N(o,a)` on the known set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    pub num_obs: usize,
    pub num_actions: usize,
    /// `[o][a][z]`; rows outside the known set are zero.
    pub p_hat: Vec<f64>,
    pub known: Vec<bool>,
}

impl EmpiricalModel {
    /// Wraps a known kernel with every pair marked known.
    pub fn exact(num_obs: usize, num_actions: usize, p: &[f64]) -> Self {
        Self { num_obs, num_actions, p_hat: p.to_vec(), known: vec![true; num_obs * num_actions] }
    }

    #[inline]
    pub fn row(&self, o: usize, a: usize) -> &[f64] {
        let off = (o * self.num_actions + a) * self.num_obs;
        &self.p_hat[off..off + self.num_obs]
    }

    #[inline]
    pub fn is_known(&self, o: usize, a: usize) -> bool {
        self.known[o * self.num_actions + a]
    }
}

/// `W(q,o,a,·)` for one `(q,o,a)`: `out[o'] = Σ_q' τ(q'|q,L(o,a,o'))·V(q',o')`.
#[inline]
pub fn w_row(rm: &RewardMachine, labels: &[usize], q: usize, v_next: &[f64], out: &mut [f64]) {
    let num_obs = labels.len();
    for (o_next, (w, &event)) in out.iter_mut().zip(labels).enumerate() {
        *w = rm
            .tau_row(q, event)
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0.0)
            .map(|(q_next, &t)| t * v_next[q_next * num_obs + o_next])
            .sum();
    }
}

/// Full `W` table, `[q][o][a][o']`, for next-step values `v_next` over joint
/// states.
pub fn compute_w(model: &AgentModel, v_next: &[f64]) -> Vec<f64> {
    let (on, an, qn) = (model.num_obs, model.num_actions, model.rm.num_states());
    let mut w = vec![0.0; qn * on * an * on];
    for q in 0..qn {
        for o in 0..on {
            for a in 0..an {
                let off = ((q * on + o) * an + a) * on;
                w_row(&model.rm, model.label_row(o, a), q, v_next, &mut w[off..off + on]);
            }
        }
    }
    w
}

/// Mean and variance of `values` under the distribution `p`.
pub fn mean_variance(p: &[f64], values: &[f64]) -> (f64, f64) {
    let mean: f64 = p.iter().zip(values).map(|(p, v)| p * v).sum();
    let var: f64 = p
        .iter()
        .zip(values)
        .filter(|(&p, _)| p != 0.0)
        .map(|(p, v)| p * (v - mean) * (v - mean))
        .sum();
    (mean, var)
}

/// Constants of the bonus that do not depend on the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusParams {
    pub iota: f64,
    pub horizon: usize,
    pub num_obs: usize,
    pub num_actions: usize,
    pub gamma: f64,
}

impl BonusParams {
    /// `100²·H^k·O²·A·ι²` with `k` = [`MIN_TERM_HORIZON_POWER`].
    pub fn min_term_numerator(&self) -> f64 {
        let h = self.horizon as f64;
        let o = self.num_obs as f64;
        100.0 * 100.0 * libm::pow(h, MIN_TERM_HORIZON_POWER as f64) * o * o * self.num_actions as f64 * self.iota * self.iota
    }
}

/// Bernstein bonus for one cell, multiplied by γ.
///
/// `variance_w` is the variance of `W(q,o,a,·)` under `p̂(·|o,a)`, `n` is
/// `N(o,a) ≥ 1`, and `next_step_counts[o']` is `N'_{h+1}(o')`. A zero
/// next-step count takes the `H²` cap.
pub fn bonus(p_hat_row: &[f64], variance_w: f64, n: u64, next_step_counts: &[u64], params: &BonusParams) -> f64 {
    if params.gamma == 0.0 {
        return 0.0;
    }
    let n = n as f64;
    let h = params.horizon as f64;
    let iota = params.iota;
    let cap = h * h;
    let numerator = params.min_term_numerator();
    let clipped: f64 = p_hat_row
        .iter()
        .zip(next_step_counts)
        .filter(|(&p, _)| p != 0.0)
        .map(|(&p, &c)| {
            let term = if c == 0 { cap } else { (numerator / c as f64).min(cap) };
            p * term
        })
        .sum();
    let raw = sqrt(8.0 * iota * variance_w.max(0.0) / n)
        + 14.0 * h * iota / (3.0 * n)
        + sqrt(2.0 * iota / n)
        + sqrt(8.0 * clipped / n);
    params.gamma * raw
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// One agent instance: tables, counts and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentState {
    pub model: AgentModel,
    pub hyper: AgentHyper,
    pub view: StateView,
    pub optimism: Optimism,
    env_num_obs: usize,
    pub iota: f64,
    /// `[h][s][a]`
    pub q: Vec<f64>,
    /// `H+1` rows over joint states.
    pub v: Vec<f64>,
    pub counts: CountStore,
    /// Known set used by the latest plan.
    pub planned_known: Vec<bool>,
    /// Completed episodes.
    pub episode: usize,
    pub replans: usize,
    /// Sum of bonuses over every `(h,s,a)` in the latest plan.
    pub last_bonus_total: f64,
}

impl AgentState {
    pub fn new(env: &Environment, algorithm: Algorithm, hyper: AgentHyper) -> Self {
        let model = match algorithm.view() {
            StateView::Observation => AgentModel::observation_level(env),
            StateView::Joint => baselines::cross_product_model(env),
        };
        Self::with_model(model, algorithm.view(), algorithm.optimism(), env.mdp.num_obs(), hyper)
    }

    pub fn with_model(model: AgentModel, view: StateView, optimism: Optimism, env_num_obs: usize, hyper: AgentHyper) -> Self {
        let (on, an, hn) = (model.num_obs, model.num_actions, model.horizon);
        let sn = model.num_states();
        let h = hn as f64;
        let iota = iota(model.rm.num_states(), on, an, hyper.episodes * hn, hyper.rho);
        let mut v = vec![h; (hn + 1) * sn];
        v[hn * sn..].iter_mut().for_each(|x| *x = 0.0);
        Self {
            counts: CountStore::new(on, an, hn),
            q: vec![h; hn * sn * an],
            v,
            planned_known: vec![false; on * an],
            model,
            hyper,
            view,
            optimism,
            env_num_obs,
            iota,
            episode: 0,
            replans: 0,
            last_bonus_total: 0.0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }

    /// Maps an environment state to the agent's (machine state, observation).
    #[inline]
    pub fn agent_coords(&self, q: usize, o: usize) -> (usize, usize) {
        match self.view {
            StateView::Observation => (q, o),
            StateView::Joint => (0, q * self.env_num_obs + o),
        }
    }

    #[inline]
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states() + s]
    }

    #[inline]
    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        let an = self.model.num_actions;
        let off = (h * self.num_states() + s) * an;
        &self.q[off..off + an]
    }

    /// Greedy action at joint state `s` and zero-based step `h`.
    #[inline]
    pub fn act(&self, s: usize, h: usize) -> usize {
        argmax(self.q_row(h, s))
    }

    /// Greedy policy over joint states.
    pub fn greedy_policy(&self) -> JointPolicy {
        let (sn, hn) = (self.num_states(), self.model.horizon);
        let actions = (0..hn).flat_map(|h| (0..sn).map(move |s| (h, s))).map(|(h, s)| self.act(s, h)).collect();
        JointPolicy::deterministic(sn, actions)
    }

    fn bonus_params(&self) -> BonusParams {
        BonusParams {
            iota: self.iota,
            horizon: self.model.horizon,
            num_obs: self.model.num_obs,
            num_actions: self.model.num_actions,
            gamma: self.hyper.gamma,
        }
    }

    /// Replans from the current counts.
    pub fn backward_induction(&mut self) {
        let model = self.counts.empirical_model();
        self.plan_with(&model);
    }

    /// Optimistic backward induction against `estimate`.
    pub fn plan_with(&mut self, estimate: &EmpiricalModel) {
        let (on, an, hn) = (self.model.num_obs, self.model.num_actions, self.model.horizon);
        let qn = self.model.rm.num_states();
        let sn = qn * on;
        let h_cap = hn as f64;
        let params = self.bonus_params();
        let total_steps = self.hyper.episodes * hn;
        let mut w = vec![0.0; on];
        let mut phi = vec![0.0; on];
        let mut widths = vec![0.0; on];
        let mut bonus_total = 0.0;

        for h in (0..hn).rev() {
            let (head, tail) = self.v.split_at_mut((h + 1) * sn);
            let v_next = &tail[..sn];
            let next_counts = self.counts.step_obs_row(h + 1);
            for o in 0..on {
                for a in 0..an {
                    let known = estimate.is_known(o, a);
                    let n = self.counts.n(o, a);
                    let labels = &self.model.labels[(o * an + a) * on..][..on];
                    let p_row = estimate.row(o, a);
                    if self.optimism != Optimism::Bonus && known {
                        widths_for(self.optimism, p_row, n, &params, total_steps, self.hyper.rho, &mut widths);
                    }
                    for q in 0..qn {
                        let idx = ((h * sn) + q * on + o) * an + a;
                        if !known {
                            self.q[idx] = self.q[idx].min(h_cap);
                            continue;
                        }
                        w_row(&self.model.rm, labels, q, v_next, &mut w);
                        for (f, &event) in phi.iter_mut().zip(labels) {
                            *f = self.model.rm.expected_reward(q, event);
                        }
                        let r_hat: f64 = p_row.iter().zip(&phi).map(|(p, f)| p * f).sum();
                        self.q[idx] = match self.optimism {
                            Optimism::Bonus => {
                                let (pv, var) = mean_variance(p_row, &w);
                                let b = bonus(p_row, var, n, next_counts, &params);
                                bonus_total += b;
                                self.q[idx].min(h_cap).min(r_hat + pv + b)
                            }
                            Optimism::L1Ball => {
                                let radius = params.gamma * l1_radius(on, an, total_steps, self.hyper.rho, n);
                                h_cap.min(r_hat + optimistic_l1_backup(p_row, &w, radius).value)
                            }
                            Optimism::Bernstein => h_cap.min(r_hat + optimistic_box_backup(p_row, &w, &widths).value),
                        };
                    }
                }
            }
            for s in 0..sn {
                let row = &self.q[(h * sn + s) * an..][..an];
                head[h * sn + s] = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        }
        self.planned_known.clone_from(&estimate.known);
        self.last_bonus_total = bonus_total;
        self.replans += 1;
    }

    /// Records one environment trajectory. Returns true when some count
    /// reached a power of two.
    pub fn ingest(&mut self, traj: &Trajectory) -> Result<bool> {
        let mut hit = false;
        for s in &traj.steps {
            let (_, o) = self.agent_coords(s.q, s.o);
            let (_, o_next) = self.agent_coords(s.q_next, s.o_next);
            hit |= self.counts.record(s.h, o, s.a, o_next)?;
        }
        Ok(hit)
    }
}

fn widths_for(optimism: Optimism, p_row: &[f64], n: u64, params: &BonusParams, total_steps: usize, rho: f64, out: &mut [f64]) {
    if optimism == Optimism::Bernstein {
        bernstein_widths(p_row, n, params.num_obs, params.num_actions, total_steps, rho, out);
        out.iter_mut().for_each(|x| *x *= params.gamma);
    }
}

/// Per-episode outcome of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// One-based episode index.
    pub episode: usize,
    pub episodic_regret: f64,
    pub cumulative_regret: f64,
    /// The plan was recomputed at the start of this episode.
    pub replanned: bool,
    /// `V_{k,1}(s_{k,1})` of the agent.
    pub optimistic_value: f64,
    /// Exact value of the policy charged for this episode.
    pub policy_value: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub gamma: f64,
    pub optimal_value: f64,
    pub records: Vec<EpisodeRecord>,
    pub replans: usize,
}

impl RunLog {
    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative_regret)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Re-evaluate the greedy policy at most once per this many episodes.
    pub eval_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { eval_every: 1 }
    }
}

/// Runs `algorithm` for `hyper.episodes` episodes and charges exact regret
/// against the product MDP.
pub fn run(env: &Environment, algorithm: Algorithm, hyper: AgentHyper, seed: u64) -> RunLog {
    run_observed(env, algorithm, hyper, seed, RunOptions::default(), |_, _| {})
}

/// [`run`] with an observer called after every episode.
pub fn run_observed<F>(env: &Environment, algorithm: Algorithm, hyper: AgentHyper, seed: u64, options: RunOptions, mut observe: F) -> RunLog
where
    F: FnMut(&AgentState, &EpisodeRecord),
{
    let cp = CrossProductMdp::build(env);
    let optimal = cp.value_iteration();
    let s1 = cp.initial_state();
    let optimal_value = optimal.value(0, s1);
    let mut agent = AgentState::new(env, algorithm, hyper);
    let mut rng = seeded(seed);
    let eval_every = options.eval_every.max(1);

    let mut records = Vec::with_capacity(hyper.episodes);
    let mut replan_due = true;
    let mut stale = true;
    let mut policy_value = 0.0;
    let mut cumulative = 0.0;
    for k in 0..hyper.episodes {
        let replanned = replan_due;
        if replan_due {
            agent.backward_induction();
            stale = true;
        }
        if stale && k % eval_every == 0 {
            let pv = cp.policy_evaluation(&agent.greedy_policy()).expect("agent policy matches the product MDP");
            policy_value = pv.value(0, s1);
            stale = false;
        }
        let traj = env.rollout_with(&mut rng, |h, q, o, _| {
            let (qa, oa) = agent.agent_coords(q, o);
            agent.act(qa * agent.model.num_obs + oa, h)
        });
        let hit = agent.ingest(&traj).expect("trajectory matches the agent model");
        agent.episode += 1;
        replan_due = !hyper.doubling || hit;

        let episodic = (optimal_value - policy_value).max(0.0);
        cumulative += episodic;
        let record = EpisodeRecord {
            episode: k + 1,
            episodic_regret: episodic,
            cumulative_regret: cumulative,
            replanned,
            optimistic_value: agent.value(0, s1),
            policy_value,
            ret: traj.total_reward(),
        };
        observe(&agent, &record);
        records.push(record);
    }
    RunLog { algorithm, seed, gamma: hyper.gamma, optimal_value, records, replans: agent.replans }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeled_mdp::{riverswim, warehouse, Step};

    #[test]
    fn bonus_matches_hand_evaluation() {
        let params = BonusParams { iota: 5.0, horizon: 10, num_obs: 2, num_actions: 1, gamma: 1.0 };
        let b = bonus(&[0.5, 0.5], 0.0, 100, &[0, 0], &params);
        let expected = 14.0 * 10.0 * 5.0 / 300.0 + sqrt(10.0 / 100.0) + sqrt(8.0);
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 5.4779).abs() < 1e-4);
        assert_eq!(bonus(&[0.5, 0.5], 0.3, 100, &[0, 0], &BonusParams { gamma: 0.0, ..params }), 0.0);
    }

    #[test]
    fn constant_w_has_no_variance() {
        let (_, var) = mean_variance(&[0.2, 0.3, 0.5], &[0.0, 0.0, 0.0]);
        assert_eq!(var, 0.0);
    }

    #[test]
    fn empirical_ratios_and_known_set() {
        let mut c = CountStore::new(2, 2, 1);
        for _ in 0..3 {
            c.record(0, 0, 0, 0).unwrap();
        }
        c.record(0, 0, 0, 1).unwrap();
        let m = c.empirical_model();
        assert_eq!(m.row(0, 0), &[0.75, 0.25]);
        assert!(m.is_known(0, 0));
        assert!(!m.is_known(0, 1));
        assert!(!m.is_known(1, 0));
    }

    #[test]
    fn record_flags_powers_of_two() {
        let mut c = CountStore::new(1, 1, 8);
        let hits: Vec<bool> = (0..8).map(|h| c.record(h, 0, 0, 0).unwrap()).collect();
        assert_eq!(hits, [true, true, false, true, false, false, false, true]);
        assert!(c.record(8, 0, 0, 0).is_err());
        assert!(c.record(0, 1, 0, 0).is_err());
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let mut c = CountStore::new(2, 2, 2);
        let traj = Trajectory { steps: alloc::vec![Step { h: 0, q: 0, o: 0, a: 0, o_next: 1, q_next: 0, r: 0.0 }] };
        assert!(c.ingest_trajectory(&traj).is_err());
    }

    #[test]
    fn first_plan_is_fully_optimistic() {
        let env = warehouse::build(3, 9).unwrap();
        let mut agent = AgentState::new(&env, Algorithm::UcbviPrm, AgentHyper::theory(10));
        agent.backward_induction();
        assert!(agent.q.iter().all(|&x| x == 9.0));
        let sn = agent.num_states();
        assert!(agent.v[..9 * sn].iter().all(|&x| x == 9.0));
        assert!(agent.v[9 * sn..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 2.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0, 1.0, 3.0]), 2);
    }

    #[test]
    fn deterministic_machine_w_is_a_lookup() {
        let env = riverswim::build(4, 5).unwrap();
        let model = AgentModel::observation_level(&env);
        let sn = model.num_states();
        let v: Vec<f64> = (0..sn).map(|s| s as f64 * 0.25).collect();
        let w = compute_w(&model, &v);
        let (on, an) = (model.num_obs, model.num_actions);
        for q in 0..2 {
            for o in 0..on {
                for a in 0..an {
                    for z in 0..on {
                        let event = env.mdp.label(o, a, z);
                        let next_q = (0..2).find(|&qq| env.rm.tau(q, event, qq) == 1.0).unwrap();
                        assert_eq!(w[((q * on + o) * an + a) * on + z], v[next_q * on + z]);
                    }
                }
            }
        }
    }

    #[test]
    fn hyper_validation() {
        assert!(AgentHyper::new(0.0, 1.0, 10, true).is_err());
        assert!(AgentHyper::new(0.05, -1.0, 10, true).is_err());
        assert!(AgentHyper::new(0.05, 1.0, 0, true).is_err());
        assert!(AgentHyper::new(0.05, 0.0, 10, false).is_ok());
    }

    #[test]
    fn iota_formula() {
        let i = iota(3, 9, 5, 1000, 0.05);
        assert!((i - log(6.0 * 3.0 * 9.0 * 5.0 * 1000.0 / 0.05)).abs() < 1e-12);
    }
}
