//! Winning strategies with one bit of memory, read off the solver's iterates,
//! and their closure into Mealy machines.
//!
//! Memory `m = 0` pursues `b` of the first pair, `m = 1` the second. For a
//! state `s` with memory `m` the candidate moves are tried in priority order;
//! a row applies for an input if some choice leads into its target set:
//!
//! | row   | present state                              | next state        |
//! |-------|--------------------------------------------|-------------------|
//! | 1 / 2 | `Y_{k,i} \ Y_{k,i-1}`                      | `Y_{k,i-1}`       |
//! | 3 / 4 | `Y_{k,1}`, inside the pair's `b` target    | `Z`, flip `m`     |
//! | 5 / 6 | `Y_{k,i,j} \ Y_{k,i,j-1}`                  | `Y_{k,i,j-1}`     |
//! | 7 / 8 | `Y_{k,i,1}`, inside the sub-game's target  | `Y_{k,i}`         |
//! | 9 /10 | `Y_{k,i,j} \ Y_{k,i,j-1}`                  | `Y_{k,i,j}`       |
//!
//! Odd rows belong to `m = 0`, even rows to `m = 1`. With a single pair the
//! sub-game is the `mStr` region and only rows 1, 3 and 9 occur; without
//! pairs every move stays in the winning region (row 9).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::lex_valuations;
use crate::game::{Game, StateKind, SysChoice};
use crate::solver::{IterateRecord, SubRecord};
use crate::stateset::StateSet;

const NO_RANK: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyError {
    WrongPairCount {
        expected: usize,
        found: usize,
    },
    /// Strategies are extracted for at most two pairs.
    UnsupportedPairCount(usize),
    EmptyWinningRegion,
    RecordMismatch(&'static str),
    NotWinning {
        state: u32,
    },
    /// No row applies; the solver's result is not sound.
    NoApplicableRow {
        state: u32,
        memory: u8,
        input: u64,
    },
}

impl fmt::Display for StrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyError::WrongPairCount { expected, found } => {
                write!(f, "expected a game with {expected} pairs, found {found}")
            }
            StrategyError::UnsupportedPairCount(k) => {
                write!(f, "strategy extraction supports at most 2 pairs, got {k}")
            }
            StrategyError::EmptyWinningRegion => f.write_str("winning region is empty"),
            StrategyError::RecordMismatch(why) => write!(f, "iterate record mismatch: {why}"),
            StrategyError::NotWinning { state } => {
                write!(f, "state {state} is outside the winning region")
            }
            StrategyError::NoApplicableRow {
                state,
                memory,
                input,
            } => write!(
                f,
                "no strategy row applies in state {state} with memory {memory} on input {input}"
            ),
        }
    }
}

impl core::error::Error for StrategyError {}

/// One strategy move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub choice: SysChoice,
    pub target: u32,
    pub memory: u8,
    /// Row of the priority table that fired (1..=10).
    pub row: u8,
}

#[derive(Debug, Clone)]
pub struct Strategy<'a> {
    game: &'a Game,
    record: &'a IterateRecord,
    pairs: usize,
    top_rank: Vec<Vec<u32>>,
    sub_rank: Vec<Vec<u32>>,
}

fn first_rank(sets: impl Iterator<Item = StateSet>, n: usize) -> Vec<u32> {
    let mut rank = vec![NO_RANK; n];
    for (j, set) in sets.enumerate() {
        for s in set.iter() {
            if rank[s] == NO_RANK {
                rank[s] = j as u32;
            }
        }
    }
    rank
}

impl<'a> Strategy<'a> {
    fn new(game: &'a Game, record: &'a IterateRecord) -> Result<Self, StrategyError> {
        let pairs = game.pairs().len();
        if pairs > 2 {
            return Err(StrategyError::UnsupportedPairCount(pairs));
        }
        if record.winning.is_empty() {
            return Err(StrategyError::EmptyWinningRegion);
        }
        if record.winning.universe() != game.num_states() {
            return Err(StrategyError::RecordMismatch(
                "record over a different game",
            ));
        }
        let n = game.num_states();
        let mut top_rank = Vec::new();
        let mut sub_rank = Vec::new();
        match &record.root {
            SubRecord::MStr(_) if pairs == 0 => {}
            SubRecord::Str(r) if r.pairs.len() == pairs && pairs > 0 => {
                for p in &r.pairs {
                    if p.iterates.last().map(|i| &i.set) != Some(&record.winning) {
                        return Err(StrategyError::RecordMismatch(
                            "last top-level iterate differs from W",
                        ));
                    }
                    let top = first_rank(p.iterates.iter().map(|i| i.set.clone()), n);
                    let mut sub = vec![NO_RANK; n];
                    if pairs == 2 {
                        for s in record.winning.iter() {
                            let it = &p.iterates[top[s] as usize];
                            let Some(SubRecord::Str(inner)) = it.sub.as_deref() else {
                                return Err(StrategyError::RecordMismatch(
                                    "two-pair iterate without a nested Str call",
                                ));
                            };
                            let ipr = &inner.pairs[0];
                            sub[s] = ipr
                                .iterates
                                .iter()
                                .position(|ii| ii.set.contains(s))
                                .map_or(NO_RANK, |j| j as u32);
                        }
                    }
                    top_rank.push(top);
                    sub_rank.push(sub);
                }
            }
            _ => {
                return Err(StrategyError::RecordMismatch(
                    "record shape does not match pairs",
                ))
            }
        }
        Ok(Strategy {
            game,
            record,
            pairs,
            top_rank,
            sub_rank,
        })
    }

    pub fn game(&self) -> &'a Game {
        self.game
    }

    pub fn winning(&self) -> &'a StateSet {
        &self.record.winning
    }

    /// Number of memory values in use (1 or 2).
    pub fn memory_size(&self) -> u8 {
        if self.pairs == 2 {
            2
        } else {
            1
        }
    }

    /// Index of the first top-level iterate of pair `k` containing `s`.
    pub fn top_rank(&self, k: usize, s: usize) -> Option<u32> {
        self.top_rank
            .get(k)
            .and_then(|r| r.get(s))
            .copied()
            .filter(|&r| r != NO_RANK)
    }

    /// First applicable move into `target`, in choice order.
    fn first_into(&self, s: usize, input: u64, target: &StateSet) -> Option<(SysChoice, u32)> {
        self.game
            .moves(s, input)
            .find(|m| target.contains(m.target as usize))
            .map(|m| (m.choice, m.target))
    }

    /// The move into `target` of lowest rank under `ranks`, first in choice
    /// order among equals.
    fn lowest_into(
        &self,
        s: usize,
        input: u64,
        target: &StateSet,
        ranks: &[u32],
    ) -> Option<(SysChoice, u32)> {
        self.game
            .moves(s, input)
            .filter(|m| target.contains(m.target as usize))
            .min_by_key(|m| ranks[m.target as usize])
            .map(|m| (m.choice, m.target))
    }

    /// The move in state `s` with memory `memory` on `input`.
    pub fn decide(&self, s: usize, memory: u8, input: u64) -> Result<Decision, StrategyError> {
        let w = &self.record.winning;
        if !w.contains(s) {
            return Err(StrategyError::NotWinning { state: s as u32 });
        }
        let fail = StrategyError::NoApplicableRow {
            state: s as u32,
            memory,
            input,
        };
        let fire = |hit: Option<(SysChoice, u32)>, memory: u8, row: u8| {
            hit.map(|(choice, target)| Decision {
                choice,
                target,
                memory,
                row,
            })
        };

        let root = match &self.record.root {
            SubRecord::MStr(r) => {
                return fire(self.first_into(s, input, &r.region), 0, 9).ok_or(fail);
            }
            SubRecord::Str(r) => r,
        };
        let k = memory as usize;
        if k >= self.pairs {
            return Err(fail);
        }
        let m = memory;
        let prec = &root.pairs[k];
        let j = self.top_rank[k][s];
        if j == NO_RANK || j == 0 {
            return Err(fail);
        }
        let j = j as usize;

        if j >= 2 {
            let below = &prec.iterates[j - 1].set;
            if let Some(d) = fire(self.first_into(s, input, below), m, 1 + m) {
                return Ok(d);
            }
        }
        if prec.target.contains(s) {
            let flipped = if self.pairs == 2 { 1 - m } else { m };
            let hit = self.lowest_into(s, input, w, &self.top_rank[flipped as usize]);
            if let Some(d) = fire(hit, flipped, 3 + m) {
                return Ok(d);
            }
        }
        let Some(sub) = prec.iterates[j].sub.as_deref() else {
            return Err(fail);
        };
        match sub {
            SubRecord::MStr(mr) => {
                fire(self.first_into(s, input, &mr.region), m, 9 + m).ok_or(fail)
            }
            SubRecord::Str(inner) => {
                let ipr = &inner.pairs[0];
                let jj = self.sub_rank[k][s];
                if jj == NO_RANK || jj == 0 {
                    return Err(fail);
                }
                let jj = jj as usize;
                if jj >= 2 {
                    let below = &ipr.iterates[jj - 1].set;
                    if let Some(d) = fire(self.first_into(s, input, below), m, 5 + m) {
                        return Ok(d);
                    }
                }
                if ipr.target.contains(s) {
                    if let Some(d) = fire(self.first_into(s, input, &inner.z), m, 7 + m) {
                        return Ok(d);
                    }
                }
                let stay = &ipr.iterates[jj].set;
                fire(self.first_into(s, input, stay), m, 9 + m).ok_or(fail)
            }
        }
    }
}

/// Strategy for a game with two Streett pairs.
pub fn extract_strategy_2pairs<'a>(
    g: &'a Game,
    rec: &'a IterateRecord,
) -> Result<Strategy<'a>, StrategyError> {
    if g.pairs().len() != 2 {
        return Err(StrategyError::WrongPairCount {
            expected: 2,
            found: g.pairs().len(),
        });
    }
    Strategy::new(g, rec)
}

/// Memoryless strategy for a game with one Streett pair.
pub fn extract_strategy_1pair<'a>(
    g: &'a Game,
    rec: &'a IterateRecord,
) -> Result<Strategy<'a>, StrategyError> {
    if g.pairs().len() != 1 {
        return Err(StrategyError::WrongPairCount {
            expected: 1,
            found: g.pairs().len(),
        });
    }
    Strategy::new(g, rec)
}

/// Strategy for games with zero, one or two pairs.
pub fn extract_strategy<'a>(
    g: &'a Game,
    rec: &'a IterateRecord,
) -> Result<Strategy<'a>, StrategyError> {
    Strategy::new(g, rec)
}

/// Per-state information carried into simulation and emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Annotation {
    pub ok_e: bool,
    pub ok_s: bool,
    pub x: u32,
    pub y: u32,
}

impl Annotation {
    pub fn of(kind: &StateKind) -> Annotation {
        let (x, y) = kind.regular().map_or((0, 0), |g| (g.x, g.y));
        Annotation {
            ok_e: kind.ok_e(),
            ok_s: kind.ok_s(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub game_state: Option<u32>,
    pub memory: u8,
    pub annotation: Option<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineTransition {
    pub output: u64,
    pub env_recover: Option<u32>,
    pub sys_recover: Option<u32>,
    pub next: u32,
    /// Strategy row that produced the transition, for diagnostics.
    pub row: Option<u8>,
}

impl MachineTransition {
    pub fn choice(&self) -> SysChoice {
        SysChoice {
            output: self.output,
            env_recover: self.env_recover,
            sys_recover: self.sys_recover,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MachineError {
    NoStates,
    BadInitial(u32),
    /// `transitions` must hold one entry per state and input valuation.
    NotInputComplete {
        expected: usize,
        found: usize,
    },
    BadNext {
        state: usize,
        input: u64,
        next: u32,
    },
    BadOutput {
        state: usize,
        input: u64,
    },
}

impl fmt::Display for MachineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineError::NoStates => f.write_str("machine has no states"),
            MachineError::BadInitial(q) => write!(f, "initial state {q} out of range"),
            MachineError::NotInputComplete { expected, found } => write!(
                f,
                "machine is not input-complete: expected {expected} transitions, found {found}"
            ),
            MachineError::BadNext { state, input, next } => write!(
                f,
                "transition from {state} on input {input} targets unknown state {next}"
            ),
            MachineError::BadOutput { state, input } => write!(
                f,
                "transition from {state} on input {input} sets undeclared outputs"
            ),
        }
    }
}

impl core::error::Error for MachineError {}

/// Deterministic, input-complete Mealy machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<MachineState>,
    initial: u32,
    transitions: Vec<MachineTransition>,
}

impl MealyMachine {
    /// `transitions[q * 2^inputs + input]` is the move of state `q`.
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        states: Vec<MachineState>,
        initial: u32,
        transitions: Vec<MachineTransition>,
    ) -> Result<Self, MachineError> {
        if states.is_empty() {
            return Err(MachineError::NoStates);
        }
        if initial as usize >= states.len() {
            return Err(MachineError::BadInitial(initial));
        }
        let ni = 1usize << inputs.len();
        if transitions.len() != states.len() * ni {
            return Err(MachineError::NotInputComplete {
                expected: states.len() * ni,
                found: transitions.len(),
            });
        }
        let out_mask = (1u64 << outputs.len()) - 1;
        for (k, t) in transitions.iter().enumerate() {
            let (state, input) = (k / ni, (k % ni) as u64);
            if t.next as usize >= states.len() {
                return Err(MachineError::BadNext {
                    state,
                    input,
                    next: t.next,
                });
            }
            if t.output & !out_mask != 0 {
                return Err(MachineError::BadOutput { state, input });
            }
        }
        Ok(MealyMachine {
            inputs,
            outputs,
            states,
            initial,
            transitions,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn states(&self) -> &[MachineState] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.inputs.len()
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn transitions(&self) -> &[MachineTransition] {
        &self.transitions
    }

    pub fn transition(&self, q: usize, input: u64) -> &MachineTransition {
        &self.transitions[q * self.num_inputs() + input as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisError {
    /// The initial state is not winning. `witness` is an input on which no
    /// choice stays in the winning region, when one exists.
    Unrealizable {
        initial: u32,
        witness: Option<u64>,
        winning: StateSet,
    },
    Strategy(StrategyError),
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisError::Unrealizable {
                initial, witness, ..
            } => {
                write!(f, "unrealizable: initial state {initial} is not winning")?;
                if let Some(i) = witness {
                    write!(f, " (input {i} leaves the winning region)")?;
                }
                Ok(())
            }
            SynthesisError::Strategy(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SynthesisError {}

impl From<StrategyError> for SynthesisError {
    fn from(e: StrategyError) -> Self {
        SynthesisError::Strategy(e)
    }
}

/// Closes `st` into a Mealy machine over the (state, memory) pairs reachable
/// from `(initial, 0)`, numbered breadth-first with inputs in lexicographic order.
pub fn strategy_to_mealy(g: &Game, st: &Strategy<'_>) -> Result<MealyMachine, SynthesisError> {
    let init = g.initial();
    let w = st.winning();
    if !w.contains(init as usize) {
        let witness = lex_valuations(g.inputs().len(), 0).find(|&i| {
            g.successors(init as usize, i)
                .iter()
                .all(|&t| !w.contains(t as usize))
        });
        return Err(SynthesisError::Unrealizable {
            initial: init,
            witness,
            winning: w.clone(),
        });
    }
    let ni = g.num_inputs();
    let order: Vec<u64> = lex_valuations(g.inputs().len(), 0).collect();
    let mut index: BTreeMap<(u32, u8), u32> = BTreeMap::new();
    let mut states = vec![(init, 0u8)];
    index.insert((init, 0), 0);
    let mut transitions = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let (s, mem) = states[head];
        head += 1;
        let mut row = vec![None; ni];
        for &input in &order {
            let d = st.decide(s as usize, mem, input)?;
            let key = (d.target, d.memory);
            let next = *index.entry(key).or_insert_with(|| {
                states.push(key);
                (states.len() - 1) as u32
            });
            row[input as usize] = Some(MachineTransition {
                output: d.choice.output,
                env_recover: d.choice.env_recover,
                sys_recover: d.choice.sys_recover,
                next,
                row: Some(d.row),
            });
        }
        transitions.extend(row.into_iter().map(|t| t.expect("every input decided")));
    }
    let states = states
        .into_iter()
        .map(|(s, memory)| MachineState {
            game_state: Some(s),
            memory,
            annotation: Some(Annotation::of(g.kind(s as usize))),
        })
        .collect();
    Ok(MealyMachine {
        inputs: g.inputs().to_vec(),
        outputs: g.outputs().to_vec(),
        states,
        initial: 0,
        transitions,
    })
}
