//! Random instances for fuzzing and property checks.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::labeled_mdp::{Environment, JointPolicy, LabeledMdp};
use crate::reward_free::{placeholder_alphabet, Kernel};
use crate::reward_machine::RewardMachine;
use crate::rng::unit;

/// A random point of the simplex; each entry is zeroed with probability
/// `sparsity` (at least one entry survives).
pub fn distribution<R: Rng + ?Sized>(n: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| if unit(rng) < sparsity { 0.0 } else { unit(rng) + 1e-3 }).collect();
    if p.iter().all(|&x| x == 0.0) {
        p[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Random kernel `[o][a][o']`.
pub fn kernel<R: Rng + ?Sized>(num_obs: usize, num_actions: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    (0..num_obs * num_actions).flat_map(|_| distribution(num_obs, sparsity, rng)).collect()
}

/// Random machine; with `deterministic` every row is one-hot.
pub fn machine<R: Rng + ?Sized>(num_states: usize, num_events: usize, deterministic: bool, rng: &mut R) -> RewardMachine {
    let rows = num_states * num_events;
    let mut tau = Vec::with_capacity(rows * num_states);
    for _ in 0..rows {
        if deterministic {
            let mut row = vec![0.0; num_states];
            row[rng.gen_range(0..num_states)] = 1.0;
            tau.extend(row);
        } else {
            tau.extend(distribution(num_states, 0.3, rng));
        }
    }
    let nu = (0..rows * num_states).map(|_| if unit(rng) < 0.5 { 0.0 } else { unit(rng) }).collect();
    RewardMachine::new(num_states, num_events, rng.gen_range(0..num_states), tau, nu).expect("random machine is valid")
}

/// Random labeled MDP with `num_events` events and initial observation 0.
pub fn labeled_mdp<R: Rng + ?Sized>(num_obs: usize, num_actions: usize, horizon: usize, num_events: usize, rng: &mut R) -> Result<LabeledMdp> {
    let p = kernel(num_obs, num_actions, 0.3, rng);
    let labels = (0..num_obs * num_actions * num_obs).map(|_| rng.gen_range(0..num_events)).collect();
    LabeledMdp::new(num_obs, num_actions, horizon, p, labels, 0)
}

/// Random environment over anonymous events.
pub fn environment<R: Rng + ?Sized>(
    num_obs: usize,
    num_actions: usize,
    horizon: usize,
    num_rm_states: usize,
    num_events: usize,
    deterministic: bool,
    rng: &mut R,
) -> Result<Environment> {
    let mdp = labeled_mdp(num_obs, num_actions, horizon, num_events, rng)?;
    let rm = machine(num_rm_states, num_events, deterministic, rng);
    Environment::new(mdp, rm, placeholder_alphabet(num_events))
}

/// Random stochastic Markov policy over `num_states` states.
pub fn markov_policy<R: Rng + ?Sized>(num_states: usize, num_actions: usize, horizon: usize, rng: &mut R) -> JointPolicy {
    let probs = (0..num_states * horizon).flat_map(|_| distribution(num_actions, 0.3, rng)).collect();
    JointPolicy::Stochastic { num_states, num_actions, probs }
}

/// Copy of `base` with every row perturbed and renormalized.
pub fn perturbed_kernel<R: Rng + ?Sized>(base: &Kernel, scale: f64, rng: &mut R) -> Kernel {
    let on = base.num_obs;
    let mut p = base.p.clone();
    for row in p.chunks_mut(on) {
        for x in row.iter_mut() {
            *x = (*x + scale * (unit(rng) - 0.5)).max(0.0);
        }
        if row.iter().all(|&x| x == 0.0) {
            row[0] = 1.0;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    Kernel { p, ..base.clone() }
}
