//! Tabular episodic reinforcement learning with probabilistic reward machines.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration,
//! CSV logging and the command line live in the companion `prm-lab` crate.
//!
//! Module map:
//!
//! * [`reward_machine`]: probabilistic and deterministic reward machines.
//! * [`labeled_mdp`]: labeled MDPs, benchmark environments and rollouts.
//! * [`cross_product`]: the Markovian product MDP with exact planning,
//!   policy evaluation and occupancy measures.
//! * [`ucbvi`]: the UCBVI-PRM agent and its shared episodic driver.
//! * [`baselines`]: UCBVI on the product MDP and the two UCRL2-RM variants.
//! * [`reward_free`]: reward-free exploration and planning for arbitrary
//!   non-Markovian rewards.
//! * [`experiment`]: exact regret accounting across seeded runs.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod cross_product;
pub mod error;
pub mod experiment;
pub mod labeled_mdp;
pub mod random;
pub mod reward_free;
pub mod reward_machine;
pub mod rng;
pub mod ucbvi;

pub use cross_product::{CrossProductMdp, PolicyValues, ValueTables};
pub use error::{Error, Result};
pub use labeled_mdp::{Environment, JointPolicy, LabeledMdp, Trajectory};
pub use reward_machine::{EventAlphabet, RewardMachine};

/// Absolute tolerance used when checking that probability rows sum to one.
pub const PROB_TOLERANCE: f64 = 1e-9;
