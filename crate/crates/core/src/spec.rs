//! GR(1) specifications: signals, safety automata and fairness formulas.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::automaton::{AutomatonError, SafetyAutomaton};
use crate::expr::{BoolExpr, MAX_SIGNALS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignalKind {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signal {
    pub name: String,
    pub kind: SignalKind,
}

/// Which side of the specification a component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Env,
    Sys,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Env => "env",
            Role::Sys => "sys",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    NoInputs,
    NoOutputs,
    DuplicateSignal(String),
    TooManySignals(usize),
    /// A formula or guard refers to a signal index that is not declared.
    UndeclaredSignal {
        role: Role,
        index: usize,
    },
    /// Fairness formulas talk about a single step.
    NextInFairness {
        role: Role,
        index: usize,
    },
    Automaton {
        role: Role,
        index: usize,
        error: AutomatonError,
    },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::NoInputs => f.write_str("specification declares no input signal"),
            SpecError::NoOutputs => f.write_str("specification declares no output signal"),
            SpecError::DuplicateSignal(s) => write!(f, "signal `{s}` declared twice"),
            SpecError::TooManySignals(n) => {
                write!(f, "{n} signals declared, at most {MAX_SIGNALS} supported")
            }
            SpecError::UndeclaredSignal { role, index } => {
                write!(f, "{role} formula refers to undeclared signal #{index}")
            }
            SpecError::NextInFairness { role, index } => {
                write!(
                    f,
                    "{role} fairness formula #{index} uses a next-step reference"
                )
            }
            SpecError::Automaton { role, index, error } => {
                write!(f, "{role} safety automaton #{index}: {error}")
            }
        }
    }
}

impl core::error::Error for SpecError {}

/// A validated GR(1) specification.
///
/// Signals are indexed inputs first, then outputs; automaton guards and
/// fairness formulas use those indices. Several safety automata per side are
/// allowed and are composed synchronously when the game is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gr1Spec {
    inputs: Vec<String>,
    outputs: Vec<String>,
    env_safety: Vec<SafetyAutomaton>,
    sys_safety: Vec<SafetyAutomaton>,
    env_fair: Vec<BoolExpr>,
    sys_fair: Vec<BoolExpr>,
}

impl Gr1Spec {
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        env_safety: Vec<SafetyAutomaton>,
        sys_safety: Vec<SafetyAutomaton>,
        env_fair: Vec<BoolExpr>,
        sys_fair: Vec<BoolExpr>,
    ) -> Result<Self, SpecError> {
        if inputs.is_empty() {
            return Err(SpecError::NoInputs);
        }
        if outputs.is_empty() {
            return Err(SpecError::NoOutputs);
        }
        let total = inputs.len() + outputs.len();
        if total > MAX_SIGNALS {
            return Err(SpecError::TooManySignals(total));
        }
        let mut seen = BTreeSet::new();
        for name in inputs.iter().chain(&outputs) {
            if !seen.insert(name.as_str()) {
                return Err(SpecError::DuplicateSignal(name.clone()));
            }
        }

        let in_range = |e: &BoolExpr| e.max_signal().is_none_or(|k| k < total);
        for (role, automata) in [(Role::Env, &env_safety), (Role::Sys, &sys_safety)] {
            for (index, aut) in automata.iter().enumerate() {
                if let Some(t) = aut.transitions().iter().find(|t| !in_range(&t.guard)) {
                    return Err(SpecError::UndeclaredSignal {
                        role,
                        index: t.guard.max_signal().unwrap_or(0),
                    });
                }
                aut.check_deterministic()
                    .map_err(|error| SpecError::Automaton { role, index, error })?;
            }
        }
        for (role, formulas) in [(Role::Env, &env_fair), (Role::Sys, &sys_fair)] {
            for (index, e) in formulas.iter().enumerate() {
                if !in_range(e) {
                    return Err(SpecError::UndeclaredSignal {
                        role,
                        index: e.max_signal().unwrap_or(0),
                    });
                }
                if e.has_next() {
                    return Err(SpecError::NextInFairness { role, index });
                }
            }
        }

        Ok(Gr1Spec {
            inputs,
            outputs,
            env_safety,
            sys_safety,
            env_fair,
            sys_fair,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn num_signals(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    /// All signal names in index order.
    pub fn signal_names(&self) -> Vec<&str> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .map(String::as_str)
            .collect()
    }

    pub fn signals(&self) -> Vec<Signal> {
        let ins = self.inputs.iter().map(|n| Signal {
            name: n.clone(),
            kind: SignalKind::Input,
        });
        let outs = self.outputs.iter().map(|n| Signal {
            name: n.clone(),
            kind: SignalKind::Output,
        });
        ins.chain(outs).collect()
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .position(|n| n == name)
    }

    /// Bits of a letter that belong to input signals.
    pub fn input_mask(&self) -> u64 {
        (1u64 << self.inputs.len()) - 1
    }

    pub fn env_safety(&self) -> &[SafetyAutomaton] {
        &self.env_safety
    }

    pub fn sys_safety(&self) -> &[SafetyAutomaton] {
        &self.sys_safety
    }

    pub fn safety(&self, role: Role) -> &[SafetyAutomaton] {
        match role {
            Role::Env => &self.env_safety,
            Role::Sys => &self.sys_safety,
        }
    }

    /// The fairness assumptions `A_1..A_m`.
    pub fn env_fair(&self) -> &[BoolExpr] {
        &self.env_fair
    }

    /// The fairness guarantees `G_1..G_n`.
    pub fn sys_fair(&self) -> &[BoolExpr] {
        &self.sys_fair
    }

    pub fn fair(&self, role: Role) -> &[BoolExpr] {
        match role {
            Role::Env => &self.env_fair,
            Role::Sys => &self.sys_fair,
        }
    }
}
