//! The product of a labeled MDP and a reward machine.
//!
//! Joint states are indexed `s = q·O + o`. Transitions are
//! `P((q',o')|(q,o),a) = p(o'|o,a)·τ(q'|q,L(o,a,o'))` and the expected reward
//! is `R(s,a) = Σ_o' p(o'|o,a)·Σ_q' τ(q'|q,σ)·ν(q,σ,q')` with `σ = L(o,a,o')`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::labeled_mdp::{Environment, JointPolicy};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossProductMdp {
    num_rm_states: usize,
    num_obs: usize,
    num_actions: usize,
    horizon: usize,
    /// `[s][a][s']`
    p: Vec<f64>,
    /// `[s][a]`
    r: Vec<f64>,
    initial: usize,
}

/// Optimal finite-horizon solution. `v` has `H+1` rows of `S` values (the
/// last row is zero); `q` is `[h][s][a]`; `greedy` is `[h][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub greedy: Vec<usize>,
}

impl ValueTables {
    #[inline]
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states + s]
    }

    #[inline]
    pub fn q_value(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn greedy_policy(&self) -> JointPolicy {
        JointPolicy::deterministic(self.num_states, self.greedy.clone())
    }
}

/// Values of a fixed policy, `H+1` rows of `S` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValues {
    pub num_states: usize,
    pub v: Vec<f64>,
}

impl PolicyValues {
    #[inline]
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states + s]
    }
}

/// Step-indexed occupancy over joint state-action pairs, `[h][s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub per_step: Vec<f64>,
}

impl Occupancy {
    #[inline]
    pub fn at(&self, h: usize, s: usize, a: usize) -> f64 {
        self.per_step[(h * self.num_states + s) * self.num_actions + a]
    }

    /// `μ(s,a) = Σ_h μ_h(s,a)`.
    pub fn total(&self) -> Vec<f64> {
        let cells = self.num_states * self.num_actions;
        let mut out = vec![0.0; cells];
        for step in self.per_step.chunks(cells) {
            out.iter_mut().zip(step).for_each(|(o, x)| *o += x);
        }
        out
    }

    /// Marginalizes machine states out: `[h][o][a]` with `s = q·O + o`.
    pub fn observation_level(&self, num_obs: usize) -> Vec<f64> {
        let a_n = self.num_actions;
        let mut out = vec![0.0; self.horizon * num_obs * a_n];
        for h in 0..self.horizon {
            for s in 0..self.num_states {
                let o = s % num_obs;
                for a in 0..a_n {
                    out[(h * num_obs + o) * a_n + a] += self.at(h, s, a);
                }
            }
        }
        out
    }

    fn scale_add(&mut self, w: f64, other: &Occupancy) {
        self.per_step.iter_mut().zip(&other.per_step).for_each(|(x, y)| *x += w * y);
    }
}

impl CrossProductMdp {
    pub fn build(env: &Environment) -> Self {
        let mdp = &env.mdp;
        let rm = &env.rm;
        let (o_n, a_n, q_n) = (mdp.num_obs(), mdp.num_actions(), rm.num_states());
        let s_n = q_n * o_n;
        let mut p = vec![0.0; s_n * a_n * s_n];
        let mut r = vec![0.0; s_n * a_n];
        for q in 0..q_n {
            for o in 0..o_n {
                let s = q * o_n + o;
                for a in 0..a_n {
                    let row = &mut p[(s * a_n + a) * s_n..][..s_n];
                    let mut reward = 0.0;
                    for (o_next, &po) in mdp.p_row(o, a).iter().enumerate() {
                        if po == 0.0 {
                            continue;
                        }
                        let event = mdp.label(o, a, o_next);
                        for (q_next, &t) in rm.tau_row(q, event).iter().enumerate() {
                            row[q_next * o_n + o_next] += po * t;
                        }
                        reward += po * rm.expected_reward(q, event);
                    }
                    r[s * a_n + a] = reward;
                }
            }
        }
        Self {
            num_rm_states: q_n,
            num_obs: o_n,
            num_actions: a_n,
            horizon: mdp.horizon(),
            p,
            r,
            initial: env.initial_joint_state(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_rm_states * self.num_obs
    }

    pub fn num_rm_states(&self) -> usize {
        self.num_rm_states
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

    pub fn initial_state(&self) -> usize {
        self.initial
    }

    #[inline]
    pub fn p_row(&self, s: usize, a: usize) -> &[f64] {
        let s_n = self.num_states();
        &self.p[(s * self.num_actions + a) * s_n..][..s_n]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.r[s * self.num_actions + a]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.p
    }

    pub fn rewards(&self) -> &[f64] {
        &self.r
    }

    #[inline]
    fn backup(&self, s: usize, a: usize, next: &[f64]) -> f64 {
        self.reward(s, a) + self.p_row(s, a).iter().zip(next).map(|(p, v)| p * v).sum::<f64>()
    }

    /// Backward induction; ties go to the lowest action index.
    pub fn value_iteration(&self) -> ValueTables {
        let (s_n, a_n, h_n) = (self.num_states(), self.num_actions, self.horizon);
        let mut v = vec![0.0; (h_n + 1) * s_n];
        let mut q = vec![0.0; h_n * s_n * a_n];
        let mut greedy = vec![0; h_n * s_n];
        for h in (0..h_n).rev() {
            let (head, tail) = v.split_at_mut((h + 1) * s_n);
            let next = &tail[..s_n];
            let cur = &mut head[h * s_n..];
            for s in 0..s_n {
                let mut best = f64::NEG_INFINITY;
                let mut best_a = 0;
                for a in 0..a_n {
                    let value = self.backup(s, a, next);
                    q[(h * s_n + s) * a_n + a] = value;
                    if value > best {
                        best = value;
                        best_a = a;
                    }
                }
                cur[s] = best;
                greedy[h * s_n + s] = best_a;
            }
        }
        ValueTables { num_states: s_n, num_actions: a_n, horizon: h_n, v, q, greedy }
    }

    /// Exact values of `policy`; mixtures are evaluated per component.
    pub fn policy_evaluation(&self, policy: &JointPolicy) -> Result<PolicyValues> {
        let (s_n, a_n, h_n) = (self.num_states(), self.num_actions, self.horizon);
        policy.check(s_n, a_n, h_n)?;
        if let JointPolicy::Mixture(parts) = policy {
            let mut v = vec![0.0; (h_n + 1) * s_n];
            for (w, part) in parts {
                let pv = self.policy_evaluation(part)?;
                v.iter_mut().zip(&pv.v).for_each(|(x, y)| *x += w * y);
            }
            return Ok(PolicyValues { num_states: s_n, v });
        }
        let mut v = vec![0.0; (h_n + 1) * s_n];
        let mut probs = vec![0.0; a_n];
        for h in (0..h_n).rev() {
            let (head, tail) = v.split_at_mut((h + 1) * s_n);
            let next = &tail[..s_n];
            for s in 0..s_n {
                policy.action_probs(h, s, &mut probs);
                head[h * s_n + s] = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(a, &w)| w * self.backup(s, a, next))
                    .sum();
            }
        }
        Ok(PolicyValues { num_states: s_n, v })
    }

    /// Forward recursion of `μ_h(s,a)` from the initial state.
    pub fn occupancy_measure(&self, policy: &JointPolicy) -> Result<Occupancy> {
        let (s_n, a_n, h_n) = (self.num_states(), self.num_actions, self.horizon);
        policy.check(s_n, a_n, h_n)?;
        if let JointPolicy::Mixture(parts) = policy {
            let mut occ = Occupancy { num_states: s_n, num_actions: a_n, horizon: h_n, per_step: vec![0.0; h_n * s_n * a_n] };
            for (w, part) in parts {
                occ.scale_add(*w, &self.occupancy_measure(part)?);
            }
            return Ok(occ);
        }
        let mut per_step = vec![0.0; h_n * s_n * a_n];
        let mut dist = vec![0.0; s_n];
        dist[self.initial] = 1.0;
        let mut probs = vec![0.0; a_n];
        for h in 0..h_n {
            let mut next = vec![0.0; s_n];
            for s in 0..s_n {
                if dist[s] == 0.0 {
                    continue;
                }
                policy.action_probs(h, s, &mut probs);
                for a in 0..a_n {
                    let mass = dist[s] * probs[a];
                    if mass == 0.0 {
                        continue;
                    }
                    per_step[(h * s_n + s) * a_n + a] = mass;
                    for (s2, &p) in self.p_row(s, a).iter().enumerate() {
                        next[s2] += mass * p;
                    }
                }
            }
            dist = next;
        }
        Ok(Occupancy { num_states: s_n, num_actions: a_n, horizon: h_n, per_step })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeled_mdp::{warehouse, LabeledMdp};
    use crate::reward_machine::{EventAlphabet, RewardMachine};

    fn chain(right: f64, horizon: usize) -> Environment {
        // o0 --a0--> o1 w.p. `right`; o1 absorbing
        let p = vec![1.0 - right, right, 0.0, 1.0];
        let mdp = LabeledMdp::new(2, 1, horizon, p, vec![0; 4], 0).unwrap();
        Environment::new(mdp, RewardMachine::trivial(1), EventAlphabet::new()).unwrap()
    }

    #[test]
    fn single_state_machine_reproduces_base_mdp() {
        let env = chain(0.3, 3);
        let cp = CrossProductMdp::build(&env);
        assert_eq!(cp.transitions(), env.mdp.transitions());
        assert!(cp.rewards().iter().all(|&r| r == 0.0));
        let vt = cp.value_iteration();
        assert!(vt.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn warehouse_joint_transition() {
        use warehouse::*;
        let env = build(3, 9).unwrap();
        let cp = CrossProductMdp::build(&env);
        let left_of_pickup = cell_index(3, Cell { x: 1, y: 0 });
        let pickup = cell_index(3, Cell { x: 2, y: 0 });
        let s = env.joint_index(EMPTY_HANDED, left_of_pickup);
        let target = env.joint_index(CARRYING, pickup);
        assert!((cp.p_row(s, RIGHT)[target] - 0.56).abs() < 1e-12);
        for s in 0..cp.num_states() {
            for a in 0..cp.num_actions() {
                assert!((cp.p_row(s, a).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&cp.reward(s, a)));
            }
        }
    }

    #[test]
    fn one_step_value_is_max_reward() {
        let env = warehouse::build(2, 2).unwrap();
        let env = Environment { mdp: env.mdp.with_horizon(1).unwrap(), ..env };
        let cp = CrossProductMdp::build(&env);
        let vt = cp.value_iteration();
        for s in 0..cp.num_states() {
            let best = (0..cp.num_actions()).map(|a| cp.reward(s, a)).fold(f64::MIN, f64::max);
            assert_eq!(vt.value(0, s), best);
        }
    }

    #[test]
    fn greedy_policy_reproduces_optimal_values() {
        let env = warehouse::build(3, 9).unwrap();
        let cp = CrossProductMdp::build(&env);
        let vt = cp.value_iteration();
        let pv = cp.policy_evaluation(&vt.greedy_policy()).unwrap();
        assert_eq!(pv.v, vt.v);
    }

    #[test]
    fn chain_occupancy() {
        let cp = CrossProductMdp::build(&chain(0.3, 2));
        let occ = cp.occupancy_measure(&JointPolicy::Uniform { num_actions: 1 }).unwrap();
        assert_eq!(occ.at(0, 0, 0), 1.0);
        assert!((occ.total()[1] - 0.3).abs() < 1e-15);
        for h in 0..2 {
            let mass: f64 = occ.per_step[h * 2..(h + 1) * 2].iter().sum();
            assert!((mass - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_policy_on_zero_rewards_is_zero() {
        let env = warehouse::build(3, 4).unwrap();
        let env = Environment { rm: env.rm.scaled_rewards(0.0), ..env };
        let cp = CrossProductMdp::build(&env);
        let pv = cp.policy_evaluation(&JointPolicy::Uniform { num_actions: 5 }).unwrap();
        assert!(pv.v.iter().all(|&v| v == 0.0));
    }
}
