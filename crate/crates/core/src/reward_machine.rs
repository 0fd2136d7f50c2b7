//! Probabilistic reward machines over a finite event alphabet.
//!
//! A machine has `Q` states. On event `σ` in state `q` it moves to `q'` with
//! probability `tau[q][σ][q']` and emits the scalar reward `nu[q][σ][q']`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::rng::sample_index;
use crate::PROB_TOLERANCE;

/// Ordered set of events. Each event is a set of proposition names kept in
/// sorted order; the empty event always sits at index [`EventAlphabet::EMPTY`].
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventAlphabet {
    events: Vec<Vec<String>>,
    #[cfg_attr(feature = "serde", serde(skip))]
    lookup: BTreeMap<Vec<String>, usize>,
}

impl Default for EventAlphabet {
    fn default() -> Self {
        Self::new()
    }
}

impl EventAlphabet {
    pub const EMPTY: usize = 0;

    pub fn new() -> Self {
        let mut lookup = BTreeMap::new();
        lookup.insert(Vec::new(), 0);
        Self { events: vec![Vec::new()], lookup }
    }

    /// Builds an alphabet from events, inserting the empty event first.
    pub fn from_events<I, E, S>(events: I) -> Self
    where
        I: IntoIterator<Item = E>,
        E: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut alphabet = Self::new();
        for event in events {
            alphabet.insert(event);
        }
        alphabet
    }

    pub fn canonicalize<E, S>(event: E) -> Vec<String>
    where
        E: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut props: Vec<String> = event.into_iter().map(Into::into).collect();
        props.sort();
        props.dedup();
        props
    }

    /// Returns the index of the event, adding it if it is new.
    pub fn insert<E, S>(&mut self, event: E) -> usize
    where
        E: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let key = Self::canonicalize(event);
        if let Some(&i) = self.lookup.get(&key) {
            return i;
        }
        let i = self.events.len();
        self.events.push(key.clone());
        self.lookup.insert(key, i);
        i
    }

    pub fn index_of<E, S>(&self, event: E) -> Option<usize>
    where
        E: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.lookup.get(&Self::canonicalize(event)).copied()
    }

    pub fn event(&self, index: usize) -> Option<&[String]> {
        self.events.get(index).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &[String]> {
        self.events.iter().map(Vec::as_slice)
    }

    /// All proposition names mentioned by some event, sorted.
    pub fn propositions(&self) -> Vec<String> {
        let mut props: Vec<String> = self.events.iter().flatten().cloned().collect();
        props.sort();
        props.dedup();
        props
    }

    /// Rebuilds the lookup table, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.lookup = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
    }

    /// Human-readable form, `∅` or `{a,b}`.
    pub fn display(&self, index: usize) -> String {
        match self.event(index) {
            Some([]) => "∅".to_string(),
            Some(props) => format!("{{{}}}", props.join(",")),
            None => format!("<event {index}>"),
        }
    }
}

/// One invariant violation found by [`RewardMachine::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape { what: &'static str, expected: usize, found: usize },
    InitialOutOfRange { initial: usize, num_states: usize },
    RowSum { state: usize, event: usize, sum: f64 },
    NegativeProbability { state: usize, event: usize, next: usize, prob: f64 },
    RewardOutOfRange { state: usize, event: usize, next: usize, reward: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Shape { what, expected, found } => {
                write!(f, "{what}: expected {expected} entries, found {found}")
            }
            Violation::InitialOutOfRange { initial, num_states } => {
                write!(f, "initial state {initial} not below {num_states}")
            }
            Violation::RowSum { state, event, sum } => {
                write!(f, "(q={state}, σ={event}): distribution sums to {sum}")
            }
            Violation::NegativeProbability { state, event, next, prob } => {
                write!(f, "(q={state}, σ={event}) -> {next}: negative probability {prob}")
            }
            Violation::RewardOutOfRange { state, event, next, reward } => {
                write!(f, "(q={state}, σ={event}) -> {next}: reward {reward} outside [0,1]")
            }
        }
    }
}

/// Result of validating a machine. Empty means every invariant holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardMachine {
    num_states: usize,
    num_events: usize,
    initial: usize,
    /// `[q][σ][q']`, row-major.
    tau: Vec<f64>,
    /// `[q][σ][q']`, row-major.
    nu: Vec<f64>,
}

impl RewardMachine {
    /// Builds a machine, renormalizing rows whose sums are within
    /// [`PROB_TOLERANCE`] of one and rejecting anything else.
    pub fn new(
        num_states: usize,
        num_events: usize,
        initial: usize,
        mut tau: Vec<f64>,
        nu: Vec<f64>,
    ) -> Result<Self> {
        if num_states > 0 && tau.len() == num_states * num_events * num_states {
            for row in tau.chunks_mut(num_states) {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() <= PROB_TOLERANCE && sum != 1.0 {
                    row.iter_mut().for_each(|p| *p /= sum);
                }
            }
        }
        let rm = Self::from_parts_unchecked(num_states, num_events, initial, tau, nu);
        let report = rm.check();
        if report.is_valid() {
            Ok(rm)
        } else {
            Err(Error::Invalid(report.to_string()))
        }
    }

    /// Assembles a machine without checking it; see [`RewardMachine::validate`].
    pub fn from_parts_unchecked(
        num_states: usize,
        num_events: usize,
        initial: usize,
        tau: Vec<f64>,
        nu: Vec<f64>,
    ) -> Self {
        Self { num_states, num_events, initial, tau, nu }
    }

    /// Single-state machine that self-loops with zero reward on every event.
    pub fn trivial(num_events: usize) -> Self {
        Self::constant_rewards(&vec![0.0; num_events])
    }

    /// Single-state machine whose reward on event `e` is `rewards[e]`.
    pub fn constant_rewards(rewards: &[f64]) -> Self {
        Self {
            num_states: 1,
            num_events: rewards.len(),
            initial: 0,
            tau: vec![1.0; rewards.len()],
            nu: rewards.to_vec(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    pub fn initial_state(&self) -> usize {
        self.initial
    }

    #[inline]
    fn row_offset(&self, q: usize, event: usize) -> usize {
        (q * self.num_events + event) * self.num_states
    }

    /// `tau[q][σ][·]`.
    #[inline]
    pub fn tau_row(&self, q: usize, event: usize) -> &[f64] {
        let o = self.row_offset(q, event);
        &self.tau[o..o + self.num_states]
    }

    /// `nu[q][σ][·]`.
    #[inline]
    pub fn nu_row(&self, q: usize, event: usize) -> &[f64] {
        let o = self.row_offset(q, event);
        &self.nu[o..o + self.num_states]
    }

    #[inline]
    pub fn tau(&self, q: usize, event: usize, next: usize) -> f64 {
        self.tau[self.row_offset(q, event) + next]
    }

    #[inline]
    pub fn nu(&self, q: usize, event: usize, next: usize) -> f64 {
        self.nu[self.row_offset(q, event) + next]
    }

    fn check(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let cells = self.num_states * self.num_events * self.num_states;
        if self.num_states == 0 {
            violations.push(Violation::Shape { what: "states", expected: 1, found: 0 });
        }
        if self.tau.len() != cells {
            violations.push(Violation::Shape { what: "tau", expected: cells, found: self.tau.len() });
        }
        if self.nu.len() != cells {
            violations.push(Violation::Shape { what: "nu", expected: cells, found: self.nu.len() });
        }
        if !violations.is_empty() {
            return ValidationReport { violations };
        }
        if self.initial >= self.num_states {
            violations.push(Violation::InitialOutOfRange {
                initial: self.initial,
                num_states: self.num_states,
            });
        }
        for q in 0..self.num_states {
            for e in 0..self.num_events {
                let row = self.tau_row(q, e);
                let sum: f64 = row.iter().sum();
                for (next, &p) in row.iter().enumerate() {
                    if p < 0.0 || !p.is_finite() {
                        violations.push(Violation::NegativeProbability { state: q, event: e, next, prob: p });
                    }
                }
                if (sum - 1.0).abs() > PROB_TOLERANCE || !sum.is_finite() {
                    violations.push(Violation::RowSum { state: q, event: e, sum });
                }
                for (next, &r) in self.nu_row(q, e).iter().enumerate() {
                    if !(0.0..=1.0).contains(&r) {
                        violations.push(Violation::RewardOutOfRange { state: q, event: e, next, reward: r });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Checks every invariant, including agreement with `alphabet`.
    pub fn validate(&self, alphabet: &EventAlphabet) -> ValidationReport {
        let mut report = self.check();
        if alphabet.len() != self.num_events {
            report.violations.insert(
                0,
                Violation::Shape { what: "alphabet", expected: self.num_events, found: alphabet.len() },
            );
        }
        report
    }

    fn check_indices(&self, q: usize, event: usize) -> Result<()> {
        if q >= self.num_states {
            return Err(Error::usage(format!("state {q} out of range (Q = {})", self.num_states)));
        }
        if event >= self.num_events {
            return Err(Error::usage(format!("event {event} out of range ({} events)", self.num_events)));
        }
        Ok(())
    }

    /// Advances the machine on `event` using the unit sample `u ∈ [0,1)`.
    pub fn step(&self, q: usize, event: usize, u: f64) -> Result<(usize, f64)> {
        self.check_indices(q, event)?;
        Ok(self.step_unchecked(q, event, u))
    }

    #[inline]
    pub(crate) fn step_unchecked(&self, q: usize, event: usize, u: f64) -> (usize, f64) {
        let next = sample_index(self.tau_row(q, event), u);
        (next, self.nu(q, event, next))
    }

    /// True iff every transition row is one-hot.
    pub fn is_deterministic(&self) -> bool {
        self.tau
            .chunks(self.num_states.max(1))
            .all(|row| row.iter().filter(|&&p| p != 0.0).count() == 1 && row.contains(&1.0))
    }

    /// Expected reward of the next machine transition, `Σ_q' tau·nu`.
    #[inline]
    pub fn expected_reward(&self, q: usize, event: usize) -> f64 {
        self.tau_row(q, event)
            .iter()
            .zip(self.nu_row(q, event))
            .map(|(p, r)| p * r)
            .sum()
    }

    /// Copy of this machine with every reward multiplied by `factor`.
    pub fn scaled_rewards(&self, factor: f64) -> Self {
        let mut rm = self.clone();
        rm.nu.iter_mut().for_each(|r| *r *= factor);
        rm
    }
}

/// Incremental construction from sparse transition records.
///
/// Rows that receive no record default to a zero-reward self-loop unless the
/// builder is strict.
#[derive(Debug, Clone)]
pub struct RewardMachineBuilder {
    num_states: usize,
    num_events: usize,
    initial: usize,
    strict: bool,
    records: BTreeMap<(usize, usize, usize), (f64, f64)>,
}

impl RewardMachineBuilder {
    pub fn new(num_states: usize, num_events: usize, initial: usize) -> Self {
        Self { num_states, num_events, initial, strict: false, records: BTreeMap::new() }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn transition(&mut self, from: usize, event: usize, to: usize, prob: f64, reward: f64) -> Result<&mut Self> {
        if from >= self.num_states || to >= self.num_states {
            return Err(Error::Invalid(format!("unknown state in transition {from} -> {to}")));
        }
        if event >= self.num_events {
            return Err(Error::Invalid(format!("unknown event {event}")));
        }
        if self.records.insert((from, event, to), (prob, reward)).is_some() {
            return Err(Error::Invalid(format!("duplicate transition (q={from}, σ={event}) -> {to}")));
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<RewardMachine> {
        let (qn, en) = (self.num_states, self.num_events);
        let mut tau = vec![0.0; qn * en * qn];
        let mut nu = vec![0.0; qn * en * qn];
        let mut touched = vec![false; qn * en];
        for (&(from, event, to), &(prob, reward)) in &self.records {
            let idx = (from * en + event) * qn + to;
            tau[idx] = prob;
            nu[idx] = reward;
            touched[from * en + event] = true;
        }
        for q in 0..qn {
            for e in 0..en {
                if touched[q * en + e] {
                    continue;
                }
                if self.strict {
                    return Err(Error::Invalid(format!("incomplete distribution at (q={q}, σ={e})")));
                }
                tau[(q * en + e) * qn + q] = 1.0;
            }
        }
        RewardMachine::new(qn, en, self.initial, tau, nu)
    }
}
