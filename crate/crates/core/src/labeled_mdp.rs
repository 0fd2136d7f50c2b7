//! Labeled MDPs, policies over joint states, and the two benchmark
//! environments (RiverSwim with a patrol machine, Warehouse with a
//! pickup/delivery machine).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::reward_machine::{EventAlphabet, RewardMachine, RewardMachineBuilder};
use crate::rng::{sample_index, seeded, unit};
use crate::PROB_TOLERANCE;

/// Finite-horizon MDP whose transitions carry event labels.
///
/// `p` and `labels` are stored row-major as `[o][a][o']`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledMdp {
    num_obs: usize,
    num_actions: usize,
    horizon: usize,
    p: Vec<f64>,
    labels: Vec<usize>,
    initial_obs: usize,
}

impl LabeledMdp {
    pub fn new(
        num_obs: usize,
        num_actions: usize,
        horizon: usize,
        mut p: Vec<f64>,
        labels: Vec<usize>,
        initial_obs: usize,
    ) -> Result<Self> {
        if num_obs == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::usage("observation, action and horizon sizes must be positive"));
        }
        let cells = num_obs * num_actions * num_obs;
        if p.len() != cells || labels.len() != cells {
            return Err(Error::Invalid(format!(
                "expected {cells} transition entries, found p={} labels={}",
                p.len(),
                labels.len()
            )));
        }
        if initial_obs >= num_obs {
            return Err(Error::Invalid(format!("initial observation {initial_obs} out of range")));
        }
        for (row_idx, row) in p.chunks_mut(num_obs).enumerate() {
            if row.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::Invalid(format!(
                    "negative probability at (o={}, a={})",
                    row_idx / num_actions,
                    row_idx % num_actions
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(Error::Invalid(format!(
                    "row (o={}, a={}) sums to {sum}",
                    row_idx / num_actions,
                    row_idx % num_actions
                )));
            }
            // rounding-level drift is left alone so reloading a model is lossless
            if (sum - 1.0).abs() > 1e-12 {
                row.iter_mut().for_each(|x| *x /= sum);
            }
        }
        Ok(Self { num_obs, num_actions, horizon, p, labels, initial_obs })
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

    pub fn initial_obs(&self) -> usize {
        self.initial_obs
    }

    /// Same dynamics with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::usage("horizon must be positive"));
        }
        Ok(Self { horizon, ..self.clone() })
    }

    #[inline]
    pub fn p_row(&self, o: usize, a: usize) -> &[f64] {
        let off = (o * self.num_actions + a) * self.num_obs;
        &self.p[off..off + self.num_obs]
    }

    #[inline]
    pub fn p(&self, o: usize, a: usize, next: usize) -> f64 {
        self.p[(o * self.num_actions + a) * self.num_obs + next]
    }

    #[inline]
    pub fn label_row(&self, o: usize, a: usize) -> &[usize] {
        let off = (o * self.num_actions + a) * self.num_obs;
        &self.labels[off..off + self.num_obs]
    }

    #[inline]
    pub fn label(&self, o: usize, a: usize, next: usize) -> usize {
        self.labels[(o * self.num_actions + a) * self.num_obs + next]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.p
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// A labeled MDP together with the reward machine that scores it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Environment {
    pub mdp: LabeledMdp,
    pub rm: RewardMachine,
    pub alphabet: EventAlphabet,
}

impl Environment {
    pub fn new(mdp: LabeledMdp, rm: RewardMachine, alphabet: EventAlphabet) -> Result<Self> {
        let report = rm.validate(&alphabet);
        if !report.is_valid() {
            return Err(Error::Invalid(format!("{report}")));
        }
        if let Some(&bad) = mdp.labels.iter().find(|&&l| l >= rm.num_events()) {
            return Err(Error::Invalid(format!(
                "label {bad} not in the alphabet of {} events",
                rm.num_events()
            )));
        }
        Ok(Self { mdp, rm, alphabet })
    }

    pub fn num_joint_states(&self) -> usize {
        self.rm.num_states() * self.mdp.num_obs()
    }

    /// Joint index `s = q·O + o`.
    #[inline]
    pub fn joint_index(&self, q: usize, o: usize) -> usize {
        q * self.mdp.num_obs + o
    }

    pub fn initial_joint_state(&self) -> usize {
        self.joint_index(self.rm.initial_state(), self.mdp.initial_obs)
    }

    pub fn rollout(&self, policy: &JointPolicy, seed: u64) -> Trajectory {
        rollout(&self.mdp, &self.rm, policy, seed)
    }

    /// One episode driven by an arbitrary action rule `choose(h, q, o, rng)`.
    pub fn rollout_with<R, F>(&self, rng: &mut R, mut choose: F) -> Trajectory
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize, usize, &mut R) -> usize,
    {
        let mut steps = Vec::with_capacity(self.mdp.horizon);
        let mut q = self.rm.initial_state();
        let mut o = self.mdp.initial_obs;
        for h in 0..self.mdp.horizon {
            let a = choose(h, q, o, rng);
            let o_next = sample_index(self.mdp.p_row(o, a), unit(rng));
            let event = self.mdp.label(o, a, o_next);
            let (q_next, r) = self.rm.step_unchecked(q, event, unit(rng));
            steps.push(Step { h, q, o, a, o_next, q_next, r });
            q = q_next;
            o = o_next;
        }
        Trajectory { steps }
    }
}

/// One transition of an episode. `h` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Step {
    pub h: usize,
    pub q: usize,
    pub o: usize,
    pub a: usize,
    pub o_next: usize,
    pub q_next: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.r).sum()
    }

    /// Steps are numbered consecutively and each one starts where the
    /// previous one ended.
    pub fn is_chained(&self) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| s.h == i)
            && self
                .steps
                .windows(2)
                .all(|w| w[0].o_next == w[1].o && w[0].q_next == w[1].q)
    }
}

/// Policy over joint states `s = q·O + o` and zero-based steps.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum JointPolicy {
    /// `actions[h·S + s]`.
    Deterministic { num_states: usize, actions: Vec<usize> },
    Uniform { num_actions: usize },
    /// `probs[(h·S + s)·A + a]`.
    Stochastic { num_states: usize, num_actions: usize, probs: Vec<f64> },
    /// Episode-level mixture: one component is drawn per episode.
    Mixture(Vec<(f64, JointPolicy)>),
}

impl JointPolicy {
    pub fn deterministic(num_states: usize, actions: Vec<usize>) -> Self {
        JointPolicy::Deterministic { num_states, actions }
    }

    /// Uniform mixture over `policies`.
    pub fn uniform_mixture(policies: Vec<JointPolicy>) -> Self {
        let w = 1.0 / policies.len() as f64;
        JointPolicy::Mixture(policies.into_iter().map(|p| (w, p)).collect())
    }

    /// Validates table shapes against an environment's sizes.
    pub fn check(&self, num_states: usize, num_actions: usize, horizon: usize) -> Result<()> {
        match self {
            JointPolicy::Deterministic { num_states: s, actions } => {
                if *s != num_states || actions.len() != num_states * horizon {
                    return Err(Error::usage("deterministic policy table has the wrong shape"));
                }
                if actions.iter().any(|&a| a >= num_actions) {
                    return Err(Error::usage("policy table contains an invalid action"));
                }
            }
            JointPolicy::Uniform { num_actions: a } => {
                if *a != num_actions {
                    return Err(Error::usage("uniform policy has the wrong action count"));
                }
            }
            JointPolicy::Stochastic { num_states: s, num_actions: a, probs } => {
                if *s != num_states || *a != num_actions || probs.len() != num_states * num_actions * horizon {
                    return Err(Error::usage("stochastic policy table has the wrong shape"));
                }
                for row in probs.chunks(num_actions) {
                    if (row.iter().sum::<f64>() - 1.0).abs() > PROB_TOLERANCE {
                        return Err(Error::usage("stochastic policy row does not sum to 1"));
                    }
                }
            }
            JointPolicy::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(Error::usage("empty mixture"));
                }
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                if (total - 1.0).abs() > PROB_TOLERANCE || parts.iter().any(|(w, _)| *w < 0.0) {
                    return Err(Error::usage("mixture weights must be nonnegative and sum to 1"));
                }
                for (_, p) in parts {
                    p.check(num_states, num_actions, horizon)?;
                }
            }
        }
        Ok(())
    }

    /// Writes the action distribution at `(h, s)` into `out`.
    ///
    /// Mixtures are not Markov in general; they report the weighted average,
    /// which is only their step-marginal. Evaluate mixtures per component.
    pub fn action_probs(&self, h: usize, s: usize, out: &mut [f64]) {
        match self {
            JointPolicy::Deterministic { num_states, actions } => {
                out.iter_mut().for_each(|x| *x = 0.0);
                out[actions[h * num_states + s]] = 1.0;
            }
            JointPolicy::Uniform { num_actions } => {
                let w = 1.0 / *num_actions as f64;
                out.iter_mut().for_each(|x| *x = w);
            }
            JointPolicy::Stochastic { num_states, num_actions, probs } => {
                let off = (h * num_states + s) * num_actions;
                out.copy_from_slice(&probs[off..off + num_actions]);
            }
            JointPolicy::Mixture(parts) => {
                let mut tmp = vec![0.0; out.len()];
                out.iter_mut().for_each(|x| *x = 0.0);
                for (w, p) in parts {
                    p.action_probs(h, s, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += w * t);
                }
            }
        }
    }

    /// Resolves a mixture to one Markov component with a unit sample.
    pub fn pick_component(&self, u: f64) -> &JointPolicy {
        match self {
            JointPolicy::Mixture(parts) => {
                let weights: Vec<f64> = parts.iter().map(|(w, _)| *w).collect();
                parts[sample_index(&weights, u)].1.pick_component(u)
            }
            other => other,
        }
    }

    /// Samples an action from a non-mixture policy.
    pub fn sample_action<R: Rng + ?Sized>(&self, h: usize, s: usize, rng: &mut R) -> usize {
        match self {
            JointPolicy::Deterministic { num_states, actions } => actions[h * num_states + s],
            JointPolicy::Uniform { num_actions } => {
                let w = 1.0 / *num_actions as f64;
                sample_index(&vec![w; *num_actions], unit(rng))
            }
            JointPolicy::Stochastic { num_states, num_actions, probs } => {
                let off = (h * num_states + s) * num_actions;
                sample_index(&probs[off..off + num_actions], unit(rng))
            }
            JointPolicy::Mixture(_) => self.pick_component(unit(rng)).sample_action(h, s, rng),
        }
    }
}

/// Simulates one episode of `policy` on the labeled system.
///
/// Per step: the policy draws an action (if stochastic), `o'` is sampled from
/// `p`, the label is read off `(o, a, o')` and the machine steps on it.
pub fn rollout(mdp: &LabeledMdp, rm: &RewardMachine, policy: &JointPolicy, seed: u64) -> Trajectory {
    let mut rng = seeded(seed);
    rollout_with_rng(mdp, rm, policy, &mut rng)
}

pub fn rollout_with_rng<R: Rng + ?Sized>(
    mdp: &LabeledMdp,
    rm: &RewardMachine,
    policy: &JointPolicy,
    rng: &mut R,
) -> Trajectory {
    let component = match policy {
        JointPolicy::Mixture(_) => policy.pick_component(unit(rng)),
        other => other,
    };
    let num_obs = mdp.num_obs;
    let mut steps = Vec::with_capacity(mdp.horizon);
    let mut q = rm.initial_state();
    let mut o = mdp.initial_obs;
    for h in 0..mdp.horizon {
        let a = component.sample_action(h, q * num_obs + o, rng);
        let o_next = sample_index(mdp.p_row(o, a), unit(rng));
        let event = mdp.label(o, a, o_next);
        let (q_next, r) = rm.step_unchecked(q, event, unit(rng));
        steps.push(Step { h, q, o, a, o_next, q_next, r });
        q = q_next;
        o = o_next;
    }
    Trajectory { steps }
}

pub mod riverswim {
    //! RiverSwim chain with the two-state patrol machine.
    use super::*;

    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;

    /// Patrol states: `WANT_LEFT` waits for the left end, `WANT_RIGHT`
    /// pays 1 on reaching the right end.
    pub const WANT_LEFT: usize = 0;
    pub const WANT_RIGHT: usize = 1;

    pub const RIGHT_ADVANCE: f64 = 0.35;
    pub const RIGHT_STAY: f64 = 0.6;
    pub const RIGHT_SLIP: f64 = 0.05;

    pub fn build(num_obs: usize, horizon: usize) -> Result<Environment> {
        if num_obs < 2 || horizon < 2 {
            return Err(Error::usage("riverswim needs at least 2 observations and horizon 2"));
        }
        let n = num_obs;
        let mut alphabet = EventAlphabet::new();
        let left_end = alphabet.insert(["left_end"]);
        let right_end = alphabet.insert(["right_end"]);

        let mut p = vec![0.0; n * 2 * n];
        let idx = |o: usize, a: usize, next: usize| (o * 2 + a) * n + next;
        for o in 0..n {
            p[idx(o, LEFT, o.saturating_sub(1))] = 1.0;
            if o == 0 {
                p[idx(o, RIGHT, 1)] = 0.6;
                p[idx(o, RIGHT, 0)] = 0.4;
            } else if o == n - 1 {
                p[idx(o, RIGHT, o)] = 0.6;
                p[idx(o, RIGHT, o - 1)] = 0.4;
            } else {
                p[idx(o, RIGHT, o + 1)] = RIGHT_ADVANCE;
                p[idx(o, RIGHT, o)] = RIGHT_STAY;
                p[idx(o, RIGHT, o - 1)] = RIGHT_SLIP;
            }
        }
        let mut labels = vec![EventAlphabet::EMPTY; n * 2 * n];
        for o in 0..n {
            for a in 0..2 {
                labels[idx(o, a, 0)] = left_end;
                labels[idx(o, a, n - 1)] = right_end;
            }
        }
        let mdp = LabeledMdp::new(n, 2, horizon, p, labels, 0)?;

        // the agent starts on the left end, so the left visit is already done
        let mut rm = RewardMachineBuilder::new(2, alphabet.len(), WANT_RIGHT);
        rm.transition(WANT_LEFT, left_end, WANT_RIGHT, 1.0, 0.0)?;
        rm.transition(WANT_RIGHT, right_end, WANT_LEFT, 1.0, 1.0)?;
        Environment::new(mdp, rm.build()?, alphabet)
    }
}

pub mod warehouse {
    //! Grid warehouse with a pickup-then-deliver machine whose transitions
    //! can fail.
    use super::*;

    pub const UP: usize = 0;
    pub const RIGHT: usize = 1;
    pub const DOWN: usize = 2;
    pub const LEFT: usize = 3;
    pub const STAY: usize = 4;

    pub const INTENDED: f64 = 0.7;
    pub const PERPENDICULAR: f64 = 0.1;
    pub const SLIP_STAY: f64 = 0.1;
    pub const PICKUP_READY: f64 = 0.8;
    pub const DELIVERY_FREE: f64 = 0.9;

    pub const EMPTY_HANDED: usize = 0;
    pub const CARRYING: usize = 1;
    pub const DELIVERED: usize = 2;

    /// Grid cell `(x, y)`; observation index is `y·n + x`. `UP` increases `y`
    /// and `RIGHT` increases `x`.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    #[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
    pub struct Cell {
        pub x: usize,
        pub y: usize,
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    #[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
    pub struct Layout {
        pub charging: Cell,
        pub pickup: Cell,
        pub delivery: Cell,
    }

    impl Layout {
        pub fn default_for(n: usize) -> Self {
            Self {
                charging: Cell { x: 0, y: 0 },
                pickup: Cell { x: n - 1, y: 0 },
                delivery: Cell { x: 0, y: n - 1 },
            }
        }
    }

    pub fn cell_index(n: usize, cell: Cell) -> usize {
        cell.y * n + cell.x
    }

    fn shift(n: usize, cell: Cell, dir: usize) -> Option<Cell> {
        let Cell { x, y } = cell;
        match dir {
            UP if y + 1 < n => Some(Cell { x, y: y + 1 }),
            DOWN if y > 0 => Some(Cell { x, y: y - 1 }),
            RIGHT if x + 1 < n => Some(Cell { x: x + 1, y }),
            LEFT if x > 0 => Some(Cell { x: x - 1, y }),
            _ => None,
        }
    }

    fn perpendicular(dir: usize) -> [usize; 2] {
        match dir {
            UP | DOWN => [LEFT, RIGHT],
            _ => [UP, DOWN],
        }
    }

    pub fn build(n: usize, horizon: usize) -> Result<Environment> {
        if n < 2 {
            return Err(Error::usage("warehouse grid side must be at least 2"));
        }
        build_with_layout(n, horizon, Layout::default_for(n))
    }

    pub fn build_with_layout(n: usize, horizon: usize, layout: Layout) -> Result<Environment> {
        if n < 2 || horizon < 2 {
            return Err(Error::usage("warehouse needs grid side >= 2 and horizon >= 2"));
        }
        for c in [layout.charging, layout.pickup, layout.delivery] {
            if c.x >= n || c.y >= n {
                return Err(Error::usage(format!("cell ({}, {}) outside the {n}x{n} grid", c.x, c.y)));
            }
        }
        let num_obs = n * n;
        let num_actions = 5;
        let mut alphabet = EventAlphabet::new();
        let pickup = alphabet.insert(["pickup"]);
        let delivery = alphabet.insert(["delivery"]);

        let mut p = vec![0.0; num_obs * num_actions * num_obs];
        for y in 0..n {
            for x in 0..n {
                let cell = Cell { x, y };
                let o = cell_index(n, cell);
                for a in 0..num_actions {
                    let row = &mut p[(o * num_actions + a) * num_obs..][..num_obs];
                    if a == STAY {
                        row[o] = 1.0;
                        continue;
                    }
                    let mut moves = [(a, INTENDED), (0, PERPENDICULAR), (0, PERPENDICULAR)];
                    let [p1, p2] = perpendicular(a);
                    moves[1].0 = p1;
                    moves[2].0 = p2;
                    row[o] += SLIP_STAY;
                    for (dir, prob) in moves {
                        match shift(n, cell, dir) {
                            Some(dest) => row[cell_index(n, dest)] += prob,
                            None => row[o] += prob,
                        }
                    }
                }
            }
        }
        let pickup_cell = cell_index(n, layout.pickup);
        let delivery_cell = cell_index(n, layout.delivery);
        let mut labels = vec![EventAlphabet::EMPTY; p.len()];
        for (i, label) in labels.iter_mut().enumerate() {
            let next = i % num_obs;
            if next == pickup_cell {
                *label = pickup;
            } else if next == delivery_cell {
                *label = delivery;
            }
        }
        let mdp = LabeledMdp::new(num_obs, num_actions, horizon, p, labels, cell_index(n, layout.charging))?;

        let mut rm = RewardMachineBuilder::new(3, alphabet.len(), EMPTY_HANDED);
        rm.transition(EMPTY_HANDED, pickup, CARRYING, PICKUP_READY, 0.0)?
            .transition(EMPTY_HANDED, pickup, EMPTY_HANDED, 1.0 - PICKUP_READY, 0.0)?
            .transition(CARRYING, delivery, DELIVERED, DELIVERY_FREE, 1.0)?
            .transition(CARRYING, delivery, CARRYING, 1.0 - DELIVERY_FREE, 0.0)?;
        Environment::new(mdp, rm.build()?, alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn riverswim_kernel() {
        let env = riverswim::build(5, 10).unwrap();
        let m = &env.mdp;
        assert_eq!(m.p(3, riverswim::LEFT, 2), 1.0);
        assert_eq!(m.p(0, riverswim::LEFT, 0), 1.0);
        assert!(close(m.p(2, riverswim::RIGHT, 3), 0.35));
        assert!(close(m.p(2, riverswim::RIGHT, 2), 0.6));
        assert!(close(m.p(2, riverswim::RIGHT, 1), 0.05));
        assert!(close(m.p(0, riverswim::RIGHT, 1), 0.6));
        assert!(close(m.p(4, riverswim::RIGHT, 4), 0.6));
        assert!(env.rm.is_deterministic());
        assert_eq!(env.rm.initial_state(), riverswim::WANT_RIGHT);
        assert!(riverswim::build(1, 10).is_err());
        assert!(riverswim::build(5, 1).is_err());
    }

    #[test]
    fn warehouse_kernel() {
        use warehouse::*;
        let env = build(3, 9).unwrap();
        let m = &env.mdp;
        let center = cell_index(3, Cell { x: 1, y: 1 });
        assert_eq!(m.p(center, STAY, center), 1.0);
        assert!(close(m.p(center, UP, cell_index(3, Cell { x: 1, y: 2 })), 0.7));
        assert!(close(m.p(center, UP, cell_index(3, Cell { x: 0, y: 1 })), 0.1));
        assert!(close(m.p(center, UP, cell_index(3, Cell { x: 2, y: 1 })), 0.1));
        assert!(close(m.p(center, UP, center), 0.1));
        // corner pushed into a wall with one perpendicular also blocked
        let corner = cell_index(3, Cell { x: 0, y: 0 });
        assert!(close(m.p(corner, LEFT, corner), 0.9));
        assert!(close(m.p(corner, LEFT, cell_index(3, Cell { x: 0, y: 1 })), 0.1));
        for o in 0..m.num_obs() {
            for a in 0..m.num_actions() {
                assert!(close(m.p_row(o, a).iter().sum(), 1.0));
            }
        }
        assert!(!env.rm.is_deterministic());
        assert_eq!(env.rm.num_states(), 3);
        assert!(env.rm.validate(&env.alphabet).is_valid());
        let delivery = env.alphabet.index_of(["delivery"]).unwrap();
        assert!(close(env.rm.expected_reward(CARRYING, delivery), 0.9));
        let pickup = env.alphabet.index_of(["pickup"]).unwrap();
        let row = env.rm.tau_row(EMPTY_HANDED, pickup);
        assert!(close(row[0], 0.2) && close(row[1], 0.8) && row[2] == 0.0);
        assert_eq!(env.rm.step(EMPTY_HANDED, pickup, 0.5).unwrap().0, CARRYING);
        let mut rng = crate::rng::seeded(8);
        let draws = 100_000;
        let carrying = (0..draws)
            .filter(|_| env.rm.step(EMPTY_HANDED, pickup, crate::rng::unit(&mut rng)).unwrap().0 == CARRYING)
            .count();
        assert!((carrying as f64 / draws as f64 - 0.8).abs() <= 0.004);
    }

    #[test]
    fn single_step_forced_rollout() {
        let mdp = LabeledMdp::new(2, 1, 1, vec![0.0, 1.0, 0.0, 1.0], vec![0, 1, 0, 1], 0).unwrap();
        let mut alphabet = EventAlphabet::new();
        alphabet.insert(["goal"]);
        let mut b = RewardMachineBuilder::new(1, 2, 0);
        b.transition(0, 1, 0, 1.0, 1.0).unwrap();
        let env = Environment::new(mdp, b.build().unwrap(), alphabet).unwrap();
        let t = env.rollout(&JointPolicy::Uniform { num_actions: 1 }, 3);
        assert_eq!(t.steps, vec![Step { h: 0, q: 0, o: 0, a: 0, o_next: 1, q_next: 0, r: 1.0 }]);
    }

    #[test]
    fn rollouts_are_seed_deterministic_and_chained() {
        let env = warehouse::build(3, 9).unwrap();
        let pol = JointPolicy::Uniform { num_actions: 5 };
        let a = env.rollout(&pol, 42);
        assert_eq!(a, env.rollout(&pol, 42));
        assert_eq!(a.len(), 9);
        assert!(a.is_chained());
    }

    #[test]
    fn labels_must_fit_the_alphabet() {
        let mdp = LabeledMdp::new(1, 1, 2, vec![1.0], vec![3], 0).unwrap();
        assert!(Environment::new(mdp, RewardMachine::trivial(1), EventAlphabet::new()).is_err());
    }

    #[test]
    fn policy_shape_checks() {
        let pol = JointPolicy::deterministic(2, vec![0, 1, 0, 2]);
        assert!(pol.check(2, 2, 2).is_err());
        assert!(JointPolicy::deterministic(2, vec![0, 1, 0, 1]).check(2, 2, 2).is_ok());
        let mix = JointPolicy::Mixture(vec![(0.5, JointPolicy::Uniform { num_actions: 2 })]);
        assert!(mix.check(2, 2, 2).is_err());
    }
}
