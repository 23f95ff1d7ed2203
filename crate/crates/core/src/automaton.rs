//! Deterministic, possibly incomplete safety automata.
//!
//! A word is safe iff it has a run, i.e. the automaton never falls off its
//! transition relation. [`invariant_to_automaton`] compiles `G(phi)` style
//! invariants (with `X` next-step references) into this form, and
//! [`DenseAutomaton`] is the letter-indexed product used to build games.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{collect_bits, BoolExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub guard: BoolExpr,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyAutomaton {
    states: Vec<String>,
    initial: usize,
    transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    NoStates,
    DuplicateState(String),
    UnknownState(usize),
    /// Guards are read on the current letter only.
    NextInGuard {
        from: usize,
        to: usize,
    },
    /// Two transitions leave `state` on the same letter.
    Nondeterministic {
        state: String,
        letter: u64,
        first: usize,
        second: usize,
    },
}

impl fmt::Display for AutomatonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutomatonError::NoStates => f.write_str("automaton has no states"),
            AutomatonError::DuplicateState(s) => write!(f, "duplicate state name `{s}`"),
            AutomatonError::UnknownState(s) => write!(f, "reference to unknown state #{s}"),
            AutomatonError::NextInGuard { from, to } => write!(
                f,
                "guard of transition {from} -> {to} uses a next-step reference"
            ),
            AutomatonError::Nondeterministic {
                state,
                letter,
                first,
                second,
            } => write!(
                f,
                "nondeterministic in state `{state}`: transitions #{first} and #{second} \
                 are both enabled on letter {letter:#b}"
            ),
        }
    }
}

impl core::error::Error for AutomatonError {}

impl SafetyAutomaton {
    /// Builds and validates an automaton, including the determinism check.
    pub fn new(
        states: Vec<String>,
        initial: usize,
        transitions: Vec<Transition>,
    ) -> Result<Self, AutomatonError> {
        if states.is_empty() {
            return Err(AutomatonError::NoStates);
        }
        let mut seen = BTreeMap::new();
        for s in &states {
            if seen.insert(s.as_str(), ()).is_some() {
                return Err(AutomatonError::DuplicateState(s.clone()));
            }
        }
        if initial >= states.len() {
            return Err(AutomatonError::UnknownState(initial));
        }
        for t in &transitions {
            for q in [t.from, t.to] {
                if q >= states.len() {
                    return Err(AutomatonError::UnknownState(q));
                }
            }
            if t.guard.has_next() {
                return Err(AutomatonError::NextInGuard {
                    from: t.from,
                    to: t.to,
                });
            }
        }
        let aut = SafetyAutomaton {
            states,
            initial,
            transitions,
        };
        aut.check_deterministic()?;
        Ok(aut)
    }

    /// The automaton accepting every word: one state with a `true` self-loop.
    pub fn universal() -> Self {
        SafetyAutomaton {
            states: vec![String::from("q0")],
            initial: 0,
            transitions: vec![Transition {
                from: 0,
                guard: BoolExpr::Const(true),
                to: 0,
            }],
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Signals read by any guard.
    pub fn support(&self) -> u64 {
        self.transitions
            .iter()
            .fold(0, |acc, t| acc | t.guard.current_support())
    }

    /// Transitions leaving `state` whose guard holds on `letter`.
    pub fn enabled(&self, state: usize, letter: u64) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.from == state && t.guard.eval_letter(letter))
    }

    pub fn step(&self, state: usize, letter: u64) -> Option<usize> {
        self.enabled(state, letter).next().map(|(_, t)| t.to)
    }

    /// Checks that at most one transition is enabled per state and letter,
    /// enumerating the valuations of the signals each state's guards read.
    pub fn check_deterministic(&self) -> Result<(), AutomatonError> {
        for q in 0..self.states.len() {
            let outgoing: Vec<usize> = (0..self.transitions.len())
                .filter(|&k| self.transitions[k].from == q)
                .collect();
            if outgoing.len() < 2 {
                continue;
            }
            let support = outgoing.iter().fold(0, |acc, &k| {
                acc | self.transitions[k].guard.current_support()
            });
            for letter in subsets(support) {
                let mut enabled = outgoing
                    .iter()
                    .copied()
                    .filter(|&k| self.transitions[k].guard.eval_letter(letter));
                if let (Some(first), Some(second)) = (enabled.next(), enabled.next()) {
                    return Err(AutomatonError::Nondeterministic {
                        state: self.states[q].clone(),
                        letter,
                        first,
                        second,
                    });
                }
            }
        }
        Ok(())
    }

    /// Accepts a finite word iff it has a run.
    pub fn accepts(&self, word: &[u64]) -> bool {
        let mut q = self.initial;
        for &letter in word {
            match self.step(q, letter) {
                Some(next) => q = next,
                None => return false,
            }
        }
        true
    }
}

/// All sub-masks of `mask`, starting with the empty one.
pub(crate) fn subsets(mask: u64) -> impl Iterator<Item = u64> {
    let mut cur = Some(0u64);
    core::iter::from_fn(move || {
        let out = cur?;
        let next = (out | !mask).wrapping_add(1) & mask;
        cur = (next != 0).then_some(next);
        Some(out)
    })
}

/// Compiles the invariant `G(phi)` into a deterministic safety automaton.
///
/// Without next-step references the result has one state with a self-loop
/// guarded by `phi`. Otherwise the non-initial states are the valuations of
/// the signals `phi` reads: `state(u) -v-> state(v)` iff `phi` holds with
/// current letter `u` and next letter `v`, and `v` can itself still be
/// continued (`phi(v, w)` for some `w`). The first letter is constrained only
/// by that continuation requirement.
///
/// State names spell the bits of the read signals in index order, e.g. `s10`.
pub fn invariant_to_automaton(phi: &BoolExpr) -> SafetyAutomaton {
    if !phi.has_next() {
        return SafetyAutomaton {
            states: vec![String::from("q0")],
            initial: 0,
            transitions: vec![Transition {
                from: 0,
                guard: phi.clone(),
                to: 0,
            }],
        };
    }

    let read = phi.support();
    let read_list = collect_bits(read);
    let vals: Vec<u64> = subsets(read).collect();
    let live: Vec<bool> = vals
        .iter()
        .map(|&v| vals.iter().any(|&w| phi.eval2(v, w)))
        .collect();

    let mut states = vec![String::from("init")];
    for &v in &vals {
        let mut name = String::from("s");
        for &k in &read_list {
            name.push(if v >> k & 1 == 1 { '1' } else { '0' });
        }
        states.push(name);
    }

    let mut transitions = Vec::new();
    for (j, &v) in vals.iter().enumerate() {
        if live[j] {
            transitions.push(Transition {
                from: 0,
                guard: BoolExpr::cube(read, v),
                to: j + 1,
            });
        }
    }
    for (i, &u) in vals.iter().enumerate() {
        for (j, &v) in vals.iter().enumerate() {
            if live[j] && phi.eval2(u, v) {
                transitions.push(Transition {
                    from: i + 1,
                    guard: BoolExpr::cube(read, v),
                    to: j + 1,
                });
            }
        }
    }
    SafetyAutomaton {
        states,
        initial: 0,
        transitions,
    }
}

/// Sentinel for a missing transition in dense tables.
pub const NO_TRANSITION: u32 = u32::MAX;

/// A safety automaton tabulated over the full letter space `0..2^signals`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseAutomaton {
    names: Vec<String>,
    initial: u32,
    signals: usize,
    next: Vec<u32>,
}

/// The letter space or the product grew past the configured limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TooLarge {
    pub what: &'static str,
    pub limit: usize,
}

impl fmt::Display for TooLarge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} exceeds the limit of {}", self.what, self.limit)
    }
}

/// Most signals a dense automaton tabulates.
pub const MAX_DENSE_SIGNALS: usize = 20;

/// Per-component table over the component's own support.
struct ComponentTable {
    support: Vec<usize>,
    width: usize,
    next: Vec<u32>,
}

impl ComponentTable {
    fn new(aut: &SafetyAutomaton) -> Self {
        let support = collect_bits(aut.support());
        let width = 1usize << support.len();
        let mut next = vec![NO_TRANSITION; aut.states.len() * width];
        for q in 0..aut.states.len() {
            for local in 0..width {
                let letter = support
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (j, &k)| acc | ((local as u64 >> j & 1) << k));
                if let Some(t) = aut.step(q, letter) {
                    next[q * width + local] = t as u32;
                }
            }
        }
        ComponentTable {
            support,
            width,
            next,
        }
    }

    fn step(&self, q: u32, letter: u64) -> u32 {
        let local = self
            .support
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &k)| {
                acc | ((letter >> k & 1) as usize) << j
            });
        self.next[q as usize * self.width + local]
    }
}

impl DenseAutomaton {
    /// Synchronous product of `automata` over `signals` signals, restricted to
    /// reachable tuples and minimized. An empty list yields the universal automaton.
    pub fn product(automata: &[SafetyAutomaton], signals: usize) -> Result<Self, TooLarge> {
        if signals > MAX_DENSE_SIGNALS {
            return Err(TooLarge {
                what: "number of signals",
                limit: MAX_DENSE_SIGNALS,
            });
        }
        let letters = 1usize << signals;
        let tables: Vec<ComponentTable> = automata.iter().map(ComponentTable::new).collect();
        let init: Vec<u32> = automata.iter().map(|a| a.initial as u32).collect();

        let mut index: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        let mut tuples = vec![init.clone()];
        index.insert(init, 0);
        let mut next = Vec::new();
        let mut head = 0;
        while head < tuples.len() {
            let tuple = tuples[head].clone();
            head += 1;
            for letter in 0..letters as u64 {
                let mut succ = Vec::with_capacity(tuple.len());
                let mut alive = true;
                for (table, &q) in tables.iter().zip(&tuple) {
                    let t = table.step(q, letter);
                    if t == NO_TRANSITION {
                        alive = false;
                        break;
                    }
                    succ.push(t);
                }
                if !alive {
                    next.push(NO_TRANSITION);
                    continue;
                }
                let id = match index.get(&succ) {
                    Some(&id) => id,
                    None => {
                        let id = tuples.len() as u32;
                        if tuples.len() >= (1 << 24) {
                            return Err(TooLarge {
                                what: "safety automaton product",
                                limit: 1 << 24,
                            });
                        }
                        index.insert(succ.clone(), id);
                        tuples.push(succ);
                        id
                    }
                };
                next.push(id);
            }
        }

        let names = tuples
            .iter()
            .map(|tuple| {
                if tuple.is_empty() {
                    String::from("true")
                } else {
                    let parts: Vec<&str> = tuple
                        .iter()
                        .zip(automata)
                        .map(|(&q, a)| a.states[q as usize].as_str())
                        .collect();
                    parts.join(",")
                }
            })
            .collect();
        Ok(DenseAutomaton {
            names,
            initial: 0,
            signals,
            next,
        }
        .minimize())
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn step(&self, q: u32, letter: u64) -> Option<u32> {
        let t = self.next[(q as usize) << self.signals | letter as usize];
        (t != NO_TRANSITION).then_some(t)
    }

    /// True when every state has a transition on every letter.
    pub fn is_complete(&self) -> bool {
        self.next.iter().all(|&t| t != NO_TRANSITION)
    }

    /// Merges language-equivalent states (Moore refinement on the partial
    /// transition function) and renumbers in breadth-first order.
    pub fn minimize(&self) -> DenseAutomaton {
        let n = self.num_states();
        let letters = 1usize << self.signals;
        let mut block = vec![0u32; n];
        let mut count = 1;
        loop {
            let mut sigs: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
            let mut next_block = vec![0u32; n];
            for q in 0..n {
                let mut sig = Vec::with_capacity(letters + 1);
                sig.push(block[q]);
                for l in 0..letters {
                    let t = self.next[q * letters + l];
                    sig.push(if t == NO_TRANSITION {
                        NO_TRANSITION
                    } else {
                        block[t as usize]
                    });
                }
                let fresh = sigs.len() as u32;
                next_block[q] = *sigs.entry(sig).or_insert(fresh);
            }
            let new_count = sigs.len();
            block = next_block;
            if new_count == count {
                break;
            }
            count = new_count;
        }

        // renumber blocks breadth-first from the initial state
        let mut order = vec![u32::MAX; count];
        let mut rep = Vec::new();
        order[block[self.initial as usize] as usize] = 0;
        rep.push(self.initial as usize);
        let mut head = 0;
        while head < rep.len() {
            let q = rep[head];
            head += 1;
            for l in 0..letters {
                let t = self.next[q * letters + l];
                if t != NO_TRANSITION {
                    let b = block[t as usize] as usize;
                    if order[b] == u32::MAX {
                        order[b] = rep.len() as u32;
                        rep.push(t as usize);
                    }
                }
            }
        }
        let mut next = Vec::with_capacity(rep.len() * letters);
        for &q in &rep {
            for l in 0..letters {
                let t = self.next[q * letters + l];
                next.push(if t == NO_TRANSITION {
                    NO_TRANSITION
                } else {
                    order[block[t as usize] as usize]
                });
            }
        }
        DenseAutomaton {
            names: rep.iter().map(|&q| self.names[q].clone()).collect(),
            initial: 0,
            signals: self.signals,
            next,
        }
    }

    /// Accepts a finite word iff it has a run.
    pub fn accepts(&self, word: &[u64]) -> bool {
        let mut q = self.initial;
        for &letter in word {
            match self.step(q, letter) {
                Some(t) => q = t,
                None => return false,
            }
        }
        true
    }
}
