//! JSON reward-machine documents.
//!
//! ```json
//! {
//!   "states": 2,
//!   "initial": 0,
//!   "propositions": ["goal"],
//!   "events": [[], ["goal"]],
//!   "transitions": [
//!     {"from": 0, "event": ["goal"], "to": 1, "prob": 1.0, "reward": 1.0}
//!   ]
//! }
//! ```
//!
//! Records sharing `(from, event)` form one distribution. Rows without a
//! record default to a zero-reward self-loop unless parsing is strict.
//! `events` is optional and pins event indices; without it the alphabet is
//! the empty event followed by the used events in canonical order.

use serde::{Deserialize, Serialize};

use prm_core::reward_machine::RewardMachineBuilder;
use prm_core::{EventAlphabet, RewardMachine};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    states: usize,
    initial: usize,
    propositions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    events: Option<Vec<Vec<String>>>,
    transitions: Vec<RawTransition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    from: usize,
    event: Vec<String>,
    to: usize,
    prob: f64,
    reward: f64,
}

/// A parsed machine with its alphabet and declared propositions.
#[derive(Debug, Clone, PartialEq)]
pub struct RmDocument {
    pub rm: RewardMachine,
    pub alphabet: EventAlphabet,
    pub propositions: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject documents that leave some `(q, σ)` row without records.
    pub strict: bool,
}

fn json_error(e: serde_json::Error) -> LabError {
    LabError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_rm(text: &str, options: ParseOptions) -> Result<RmDocument> {
    let raw: RawDocument = serde_json::from_str(text).map_err(json_error)?;
    let semantic = |msg: String| LabError::Semantic(msg);
    if raw.states == 0 {
        return Err(semantic("a machine needs at least one state".into()));
    }
    if raw.initial >= raw.states {
        return Err(semantic(format!("unknown initial state {} (machine has {})", raw.initial, raw.states)));
    }
    let propositions = EventAlphabet::canonicalize(raw.propositions.iter().cloned());
    if propositions.len() != raw.propositions.len() {
        return Err(semantic("duplicate proposition".into()));
    }
    let check_props = |event: &[String]| -> Result<()> {
        match event.iter().find(|p| propositions.binary_search(p).is_err()) {
            Some(p) => Err(semantic(format!("unknown proposition {p:?}"))),
            None => Ok(()),
        }
    };

    let alphabet = match &raw.events {
        Some(events) => {
            let first_empty = events.first().is_some_and(Vec::is_empty);
            if !first_empty {
                return Err(semantic("events must start with the empty event".into()));
            }
            let mut alphabet = EventAlphabet::new();
            for e in &events[1..] {
                check_props(e)?;
                let before = alphabet.len();
                if alphabet.insert(e.iter().cloned()) != before {
                    return Err(semantic(format!("duplicate event {e:?}")));
                }
            }
            alphabet
        }
        None => {
            let mut used: Vec<Vec<String>> =
                raw.transitions.iter().map(|t| EventAlphabet::canonicalize(t.event.iter().cloned())).collect();
            used.sort();
            used.dedup();
            EventAlphabet::from_events(used)
        }
    };

    let mut builder = RewardMachineBuilder::new(raw.states, alphabet.len(), raw.initial).strict(options.strict);
    for t in &raw.transitions {
        check_props(&t.event)?;
        let event = alphabet
            .index_of(t.event.iter().cloned())
            .ok_or_else(|| semantic(format!("event {:?} is not in the declared events", t.event)))?;
        if t.from >= raw.states || t.to >= raw.states {
            return Err(semantic(format!("unknown state in transition {} -> {}", t.from, t.to)));
        }
        if !(0.0..=1.0).contains(&t.reward) {
            return Err(semantic(format!("reward {} outside [0,1]", t.reward)));
        }
        builder.transition(t.from, event, t.to, t.prob, t.reward).map_err(|e| semantic(e.to_string()))?;
    }
    let rm = builder.build().map_err(|e| semantic(e.to_string()))?;
    Ok(RmDocument { rm, alphabet, propositions })
}

/// Canonical document: one record per positive-probability entry, sorted by
/// `(from, event, to)` with events compared as sorted proposition lists.
pub fn serialize_rm(rm: &RewardMachine, alphabet: &EventAlphabet, propositions: &[String]) -> String {
    let mut props = EventAlphabet::canonicalize(propositions.iter().cloned().chain(alphabet.propositions()));
    props.dedup();
    let mut transitions = Vec::new();
    for q in 0..rm.num_states() {
        for (e, event) in alphabet.iter().enumerate() {
            for q2 in 0..rm.num_states() {
                let prob = rm.tau(q, e, q2);
                if prob > 0.0 {
                    transitions.push(RawTransition { from: q, event: event.to_vec(), to: q2, prob, reward: rm.nu(q, e, q2) });
                }
            }
        }
    }
    transitions.sort_by(|a, b| (a.from, &a.event, a.to).cmp(&(b.from, &b.event, b.to)));
    let raw = RawDocument {
        states: rm.num_states(),
        initial: rm.initial_state(),
        propositions: props,
        events: Some(alphabet.iter().map(<[String]>::to_vec).collect()),
        transitions,
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("documents always serialize");
    out.push('\n');
    out
}
