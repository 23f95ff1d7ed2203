//! Explicit turn-structured Streett games.
//!
//! In every state the environment picks an input valuation, then the system
//! picks a [`SysChoice`] (an output valuation plus, in robust mode, where to
//! resume a safety automaton it fell off). Each state/input/choice triple has
//! exactly one successor.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::automaton::{DenseAutomaton, TooLarge};
use crate::expr::{lex_key, lex_valuations};
use crate::spec::Gr1Spec;
use crate::stateset::StateSet;

/// Default bound on the number of game states.
pub const DEFAULT_STATE_CAP: usize = 1 << 22;

/// Most input or output signals a game supports.
pub const MAX_PORT_SIGNALS: usize = 16;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuildMode {
    /// Safety violations are absorbing: env errors win, sys errors lose.
    Plain,
    /// Automata are completed with error edges and the pair
    /// `<!ok_s, !ok_e>` is added.
    Robust,
}

impl fmt::Display for BuildMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuildMode::Plain => "plain",
            BuildMode::Robust => "robust",
        })
    }
}

/// A product state: automaton states, fairness counters and error flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GameState {
    pub qe: u32,
    pub qs: u32,
    pub x: u32,
    pub y: u32,
    pub ok_e: bool,
    pub ok_s: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateKind {
    Regular(GameState),
    /// Plain mode: the environment broke its safety assumption.
    WinSink,
    /// Plain mode: the system broke its safety guarantee.
    LoseSink,
    /// A state of a game not built from a specification.
    Abstract,
}

impl StateKind {
    pub fn regular(&self) -> Option<&GameState> {
        match self {
            StateKind::Regular(g) => Some(g),
            _ => None,
        }
    }

    /// Environment flag as observed in simulation; the win sink reads as an
    /// environment error.
    pub fn ok_e(&self) -> bool {
        match self {
            StateKind::Regular(g) => g.ok_e,
            StateKind::WinSink => false,
            _ => true,
        }
    }

    pub fn ok_s(&self) -> bool {
        match self {
            StateKind::Regular(g) => g.ok_s,
            StateKind::LoseSink => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SysChoice {
    /// Output valuation, bit `j` = output signal `j`.
    pub output: u64,
    /// Env-automaton state to resume in; set iff the env automaton has no
    /// transition on the joint letter (robust mode only).
    pub env_recover: Option<u32>,
    /// Same for the sys automaton.
    pub sys_recover: Option<u32>,
}

impl SysChoice {
    pub fn output(output: u64) -> Self {
        SysChoice {
            output,
            env_recover: None,
            sys_recover: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub choice: SysChoice,
    pub target: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RawMove {
    output: u32,
    env_rec: u32,
    sys_rec: u32,
    target: u32,
}

impl RawMove {
    fn from_move(m: &Move) -> Self {
        RawMove {
            output: m.choice.output as u32,
            env_rec: m.choice.env_recover.unwrap_or(NONE),
            sys_rec: m.choice.sys_recover.unwrap_or(NONE),
            target: m.target,
        }
    }

    fn to_move(self) -> Move {
        let opt = |r: u32| (r != NONE).then_some(r);
        Move {
            choice: SysChoice {
                output: self.output as u64,
                env_recover: opt(self.env_rec),
                sys_recover: opt(self.sys_rec),
            },
            target: self.target,
        }
    }
}

/// Lexicographic order on choices: output bits in declaration order, then
/// recovery indices with "no recovery" first.
pub fn choice_key(c: &SysChoice, outputs: usize) -> (u64, u64, u64) {
    let rec = |r: Option<u32>| r.map_or(0, |r| r as u64 + 1);
    (
        lex_key(c.output, outputs),
        rec(c.env_recover),
        rec(c.sys_recover),
    )
}

/// `<a, b>`: if `a` is visited infinitely often then so is `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreettPair {
    pub a: StateSet,
    pub b: StateSet,
}

/// Where a game built from a specification came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecInfo {
    pub mode: BuildMode,
    /// Number of fairness assumptions.
    pub m: u32,
    /// Number of fairness guarantees.
    pub n: u32,
    pub env_states: Vec<String>,
    pub sys_states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameError {
    Capacity {
        cap: usize,
    },
    Automaton(TooLarge),
    TooManyPorts {
        inputs: usize,
        outputs: usize,
    },
    BadInitial(u32),
    BadTarget {
        state: usize,
        input: u64,
        target: u32,
    },
    /// `moves` does not have one entry per state and input valuation.
    ShapeMismatch {
        expected: usize,
        found: usize,
    },
    DuplicateChoice {
        state: usize,
        input: u64,
    },
    PairUniverse,
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::Capacity { cap } => {
                write!(f, "game exceeds the state cap of {cap} states")
            }
            GameError::Automaton(e) => write!(f, "{e}"),
            GameError::TooManyPorts { inputs, outputs } => write!(
                f,
                "{inputs} inputs / {outputs} outputs exceed the limit of {MAX_PORT_SIGNALS} each"
            ),
            GameError::BadInitial(s) => write!(f, "initial state {s} out of range"),
            GameError::BadTarget {
                state,
                input,
                target,
            } => write!(
                f,
                "move from state {state} on input {input} targets unknown state {target}"
            ),
            GameError::ShapeMismatch { expected, found } => write!(
                f,
                "expected {expected} state/input move lists, found {found}"
            ),
            GameError::DuplicateChoice { state, input } => {
                write!(f, "state {state} lists a choice twice on input {input}")
            }
            GameError::PairUniverse => f.write_str("Streett pair over the wrong state universe"),
        }
    }
}

impl core::error::Error for GameError {}

impl From<TooLarge> for GameError {
    fn from(e: TooLarge) -> Self {
        GameError::Automaton(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    inputs: Vec<String>,
    outputs: Vec<String>,
    kinds: Vec<StateKind>,
    initial: u32,
    move_start: Vec<usize>,
    moves: Vec<RawMove>,
    succ_start: Vec<usize>,
    succs: Vec<u32>,
    pairs: Vec<StreettPair>,
    info: Option<SpecInfo>,
}

impl Game {
    /// Assembles a game from explicit move lists, indexed by
    /// `state * 2^inputs + input_valuation`. Move lists are sorted into
    /// choice order.
    pub fn from_parts(
        inputs: Vec<String>,
        outputs: Vec<String>,
        kinds: Vec<StateKind>,
        initial: u32,
        moves: Vec<Vec<Move>>,
        pairs: Vec<StreettPair>,
    ) -> Result<Game, GameError> {
        if inputs.len() > MAX_PORT_SIGNALS || outputs.len() > MAX_PORT_SIGNALS {
            return Err(GameError::TooManyPorts {
                inputs: inputs.len(),
                outputs: outputs.len(),
            });
        }
        let n = kinds.len();
        let ni = 1usize << inputs.len();
        if initial as usize >= n {
            return Err(GameError::BadInitial(initial));
        }
        if moves.len() != n * ni {
            return Err(GameError::ShapeMismatch {
                expected: n * ni,
                found: moves.len(),
            });
        }
        if pairs
            .iter()
            .any(|p| p.a.universe() != n || p.b.universe() != n)
        {
            return Err(GameError::PairUniverse);
        }
        let mut lists = moves;
        for (idx, list) in lists.iter_mut().enumerate() {
            let (state, input) = (idx / ni, (idx % ni) as u64);
            if let Some(m) = list.iter().find(|m| m.target as usize >= n) {
                return Err(GameError::BadTarget {
                    state,
                    input,
                    target: m.target,
                });
            }
            list.sort_by_key(|m| choice_key(&m.choice, outputs.len()));
            if list.windows(2).any(|w| w[0].choice == w[1].choice) {
                return Err(GameError::DuplicateChoice { state, input });
            }
        }
        let raw: Vec<Vec<RawMove>> = lists
            .iter()
            .map(|l| l.iter().map(RawMove::from_move).collect())
            .collect();
        Ok(Game::assemble(
            inputs, outputs, kinds, initial, raw, pairs, None,
        ))
    }

    fn assemble(
        inputs: Vec<String>,
        outputs: Vec<String>,
        kinds: Vec<StateKind>,
        initial: u32,
        lists: Vec<Vec<RawMove>>,
        pairs: Vec<StreettPair>,
        info: Option<SpecInfo>,
    ) -> Game {
        let mut move_start = Vec::with_capacity(lists.len() + 1);
        let mut succ_start = Vec::with_capacity(lists.len() + 1);
        let mut moves = Vec::new();
        let mut succs = Vec::new();
        move_start.push(0);
        succ_start.push(0);
        for list in lists {
            let mut targets: Vec<u32> = list.iter().map(|m| m.target).collect();
            targets.sort_unstable();
            targets.dedup();
            succs.extend(targets);
            succ_start.push(succs.len());
            moves.extend(list);
            move_start.push(moves.len());
        }
        Game {
            inputs,
            outputs,
            kinds,
            initial,
            move_start,
            moves,
            succ_start,
            succs,
            pairs,
            info,
        }
    }

    pub fn num_states(&self) -> usize {
        self.kinds.len()
    }

    /// Number of input valuations.
    pub fn num_inputs(&self) -> usize {
        1 << self.inputs.len()
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn kind(&self, s: usize) -> &StateKind {
        &self.kinds[s]
    }

    pub fn kinds(&self) -> &[StateKind] {
        &self.kinds
    }

    pub fn pairs(&self) -> &[StreettPair] {
        &self.pairs
    }

    pub fn info(&self) -> Option<&SpecInfo> {
        self.info.as_ref()
    }

    /// Same game with a different list of Streett pairs.
    pub fn with_pairs(&self, pairs: Vec<StreettPair>) -> Game {
        assert!(pairs
            .iter()
            .all(|p| p.a.universe() == self.num_states() && p.b.universe() == self.num_states()));
        Game {
            pairs,
            ..self.clone()
        }
    }

    /// Same game started from `initial`.
    pub fn with_initial(&self, initial: u32) -> Game {
        assert!((initial as usize) < self.num_states());
        Game {
            initial,
            ..self.clone()
        }
    }

    /// Attaches build metadata, e.g. after loading a game from a dump.
    pub fn with_info(mut self, info: Option<SpecInfo>) -> Game {
        self.info = info;
        self
    }

    pub fn num_moves(&self) -> usize {
        self.moves.len()
    }

    fn slot(&self, s: usize, input: u64) -> usize {
        s * self.num_inputs() + input as usize
    }

    /// Choices available in `s` on `input`, in choice order.
    pub fn moves(&self, s: usize, input: u64) -> impl ExactSizeIterator<Item = Move> + '_ {
        let k = self.slot(s, input);
        self.moves[self.move_start[k]..self.move_start[k + 1]]
            .iter()
            .map(|m| m.to_move())
    }

    /// Distinct successors of `s` on `input`, ascending.
    pub fn successors(&self, s: usize, input: u64) -> &[u32] {
        let k = self.slot(s, input);
        &self.succs[self.succ_start[k]..self.succ_start[k + 1]]
    }

    /// Successor of a specific choice, if the choice is available.
    pub fn successor(&self, s: usize, input: u64, choice: &SysChoice) -> Option<u32> {
        self.moves(s, input)
            .find(|m| m.choice == *choice)
            .map(|m| m.target)
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::full(self.num_states())
    }

    pub fn no_states(&self) -> StateSet {
        StateSet::empty(self.num_states())
    }

    /// True when every state has at least one choice for every input.
    pub fn is_total(&self) -> bool {
        (0..self.move_start.len() - 1).all(|k| self.move_start[k + 1] > self.move_start[k])
    }

    /// Controllable predecessor: states from which, for every input, some
    /// choice leads into `x`.
    pub fn pr(&self, x: &StateSet) -> StateSet {
        let ni = self.num_inputs();
        StateSet::from_fn(self.num_states(), |s| {
            (0..ni as u64).all(|i| {
                self.successors(s, i)
                    .iter()
                    .any(|&t| x.contains(t as usize))
            })
        })
    }

    /// States reachable from the initial state under all moves.
    pub fn reachable(&self) -> StateSet {
        let mut seen = self.no_states();
        let mut stack = vec![self.initial as usize];
        seen.insert(self.initial as usize);
        while let Some(s) = stack.pop() {
            for i in 0..self.num_inputs() as u64 {
                for &t in self.successors(s, i) {
                    if !seen.contains(t as usize) {
                        seen.insert(t as usize);
                        stack.push(t as usize);
                    }
                }
            }
        }
        seen
    }
}

/// Advances a fairness counter over `0..=bound`.
///
/// The value 0 always increments; any other value increments (modulo
/// `bound + 1`) when its formula holds and stays put otherwise.
pub fn step_counter(c: u32, bound: u32, satisfied: bool) -> u32 {
    debug_assert!(c <= bound);
    if c == 0 || satisfied {
        (c + 1) % (bound + 1)
    } else {
        c
    }
}

/// Bits needed to store the counters for `m` assumptions and `n` guarantees.
pub fn counter_bits(m: u32, n: u32) -> u32 {
    ceil_log2(m as u64 + 1) + ceil_log2(n as u64 + 1)
}

/// Smallest `k` with `2^k >= v` (0 for `v <= 1`).
pub fn ceil_log2(v: u64) -> u32 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub mode: BuildMode,
    pub state_cap: usize,
}

impl BuildOptions {
    pub fn new(mode: BuildMode) -> Self {
        BuildOptions {
            mode,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Regular(GameState),
    Win,
    Lose,
}

struct Interner {
    index: BTreeMap<Key, u32>,
    kinds: Vec<StateKind>,
    cap: usize,
}

impl Interner {
    fn get(&mut self, key: Key) -> Result<u32, GameError> {
        if let Some(&id) = self.index.get(&key) {
            return Ok(id);
        }
        if self.kinds.len() >= self.cap {
            return Err(GameError::Capacity { cap: self.cap });
        }
        let id = self.kinds.len() as u32;
        self.index.insert(key, id);
        self.kinds.push(match key {
            Key::Regular(g) => StateKind::Regular(g),
            Key::Win => StateKind::WinSink,
            Key::Lose => StateKind::LoseSink,
        });
        Ok(id)
    }
}

/// Builds the reachable Streett game of `spec`.
///
/// Env and sys safety automata are each composed into one minimized product.
/// Counters start at `min(1, m)` and `min(1, n)`. Pair 1 is `<x=0, y=0>`;
/// robust mode adds `<!ok_s, !ok_e>` and lets the system pick the state an
/// automaton resumes in after a violation.
pub fn build_game(spec: &Gr1Spec, opts: BuildOptions) -> Result<Game, GameError> {
    let ni = spec.inputs().len();
    let no = spec.outputs().len();
    if ni > MAX_PORT_SIGNALS || no > MAX_PORT_SIGNALS {
        return Err(GameError::TooManyPorts {
            inputs: ni,
            outputs: no,
        });
    }
    let signals = spec.num_signals();
    let env = DenseAutomaton::product(spec.env_safety(), signals)?;
    let sys = DenseAutomaton::product(spec.sys_safety(), signals)?;
    let m = spec.env_fair().len() as u32;
    let n = spec.sys_fair().len() as u32;
    let letters = 1usize << signals;

    // fair[k][letter] for k = 0 (always) and the formulas 1..=m / 1..=n
    let table = |formulas: &[crate::expr::BoolExpr]| -> Vec<Vec<bool>> {
        let mut t = vec![vec![true; letters]];
        for f in formulas {
            t.push((0..letters as u64).map(|l| f.eval_letter(l)).collect());
        }
        t
    };
    let env_fair = table(spec.env_fair());
    let sys_fair = table(spec.sys_fair());

    let robust = opts.mode == BuildMode::Robust;
    let init = GameState {
        qe: env.initial(),
        qs: sys.initial(),
        x: m.min(1),
        y: n.min(1),
        ok_e: true,
        ok_s: true,
    };
    let mut interner = Interner {
        index: BTreeMap::new(),
        kinds: Vec::new(),
        cap: opts.state_cap.max(1),
    };
    interner.get(Key::Regular(init))?;

    let input_order: Vec<u64> = lex_valuations(ni, 0).collect();
    let output_order: Vec<u64> = lex_valuations(no, 0).collect();
    let mut lists: Vec<Vec<RawMove>> = Vec::new();
    let mut head = 0;
    while head < interner.kinds.len() {
        let s = head as u32;
        let kind = interner.kinds[head];
        head += 1;
        let mut per_input: Vec<Vec<RawMove>> = vec![Vec::new(); 1 << ni];
        match kind {
            StateKind::Regular(g) => {
                for &input in &input_order {
                    let list = &mut per_input[input as usize];
                    for &output in &output_order {
                        let letter = input | output << ni;
                        let x = step_counter(g.x, m, env_fair[g.x as usize][letter as usize]);
                        let y = step_counter(g.y, n, sys_fair[g.y as usize][letter as usize]);
                        let qe = env.step(g.qe, letter);
                        let qs = sys.step(g.qs, letter);
                        if !robust {
                            let key = match (qe, qs) {
                                (None, _) => Key::Win,
                                (Some(_), None) => Key::Lose,
                                (Some(qe), Some(qs)) => Key::Regular(GameState {
                                    qe,
                                    qs,
                                    x,
                                    y,
                                    ok_e: true,
                                    ok_s: true,
                                }),
                            };
                            list.push(RawMove {
                                output: output as u32,
                                env_rec: NONE,
                                sys_rec: NONE,
                                target: interner.get(key)?,
                            });
                            continue;
                        }
                        let env_targets = resume_targets(qe, env.num_states());
                        let sys_targets = resume_targets(qs, sys.num_states());
                        for &(env_rec, qe) in &env_targets {
                            for &(sys_rec, qs) in &sys_targets {
                                let succ = GameState {
                                    qe,
                                    qs,
                                    x,
                                    y,
                                    ok_e: env_rec == NONE,
                                    ok_s: sys_rec == NONE,
                                };
                                list.push(RawMove {
                                    output: output as u32,
                                    env_rec,
                                    sys_rec,
                                    target: interner.get(Key::Regular(succ))?,
                                });
                            }
                        }
                    }
                }
            }
            _ => {
                for list in per_input.iter_mut() {
                    list.push(RawMove {
                        output: 0,
                        env_rec: NONE,
                        sys_rec: NONE,
                        target: s,
                    });
                }
            }
        }
        lists.extend(per_input);
    }

    let kinds = interner.kinds;
    let count = kinds.len();
    let x_zero = StateSet::from_fn(count, |s| match kinds[s] {
        StateKind::Regular(g) => g.x == 0,
        StateKind::LoseSink => true,
        _ => false,
    });
    let y_zero = StateSet::from_fn(count, |s| match kinds[s] {
        StateKind::Regular(g) => g.y == 0,
        StateKind::WinSink => true,
        _ => false,
    });
    let mut pairs = vec![StreettPair {
        a: x_zero,
        b: y_zero,
    }];
    if robust {
        pairs.push(StreettPair {
            a: StateSet::from_fn(count, |s| !kinds[s].ok_s()),
            b: StateSet::from_fn(count, |s| !kinds[s].ok_e()),
        });
    }
    let info = SpecInfo {
        mode: opts.mode,
        m,
        n,
        env_states: env.names().to_vec(),
        sys_states: sys.names().to_vec(),
    };
    Ok(Game::assemble(
        spec.inputs().to_vec(),
        spec.outputs().to_vec(),
        kinds,
        0,
        lists,
        pairs,
        Some(info),
    ))
}

/// The automaton step if there is one, otherwise every state as a recovery.
fn resume_targets(step: Option<u32>, states: usize) -> Vec<(u32, u32)> {
    match step {
        Some(q) => vec![(NONE, q)],
        None => (0..states as u32).map(|r| (r, r)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::invariant_to_automaton;
    use crate::expr::BoolExpr;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counter_examples() {
        assert_eq!(step_counter(0, 2, false), 1);
        assert_eq!(step_counter(2, 2, true), 0);
        assert_eq!(step_counter(1, 2, false), 1);
        assert_eq!(step_counter(0, 0, false), 0);
    }

    #[test]
    fn counter_storage() {
        assert_eq!(counter_bits(0, 0), 0);
        assert_eq!(counter_bits(1, 1), 2);
        assert_eq!(counter_bits(2, 3), 4);
        assert_eq!(counter_bits(3, 7), 5);
    }

    /// r1 r2 / g1 g2 arbiter with the mutual exclusion assumption and
    /// guarantee plus request-grant obligations.
    fn arbiter() -> Gr1Spec {
        let v = BoolExpr::var;
        let mutex = |a, b| BoolExpr::not(BoolExpr::and(v(a), v(b)));
        Gr1Spec::new(
            names(&["r1", "r2"]),
            names(&["g1", "g2"]),
            vec![invariant_to_automaton(&mutex(0, 1))],
            vec![
                invariant_to_automaton(&mutex(2, 3)),
                invariant_to_automaton(&BoolExpr::implies(v(0), BoolExpr::next(2))),
                invariant_to_automaton(&BoolExpr::implies(v(1), BoolExpr::next(3))),
            ],
            vec![],
            vec![],
        )
        .unwrap()
    }

    fn all_slots(g: &Game) -> impl Iterator<Item = (usize, u64)> + '_ {
        (0..g.num_states()).flat_map(move |s| (0..g.num_inputs() as u64).map(move |i| (s, i)))
    }

    #[test]
    fn robust_game_is_total_and_flags_match_violations() {
        let spec = arbiter();
        let g = build_game(&spec, BuildOptions::new(BuildMode::Robust)).unwrap();
        assert!(g.is_total());
        assert_eq!(g.pairs().len(), 2);
        let env = DenseAutomaton::product(spec.env_safety(), 4).unwrap();
        let sys = DenseAutomaton::product(spec.sys_safety(), 4).unwrap();
        for (s, i) in all_slots(&g) {
            let st = *g.kind(s).regular().unwrap();
            let mut seen = alloc::collections::BTreeSet::new();
            for mv in g.moves(s, i) {
                assert!(seen.insert(mv.choice), "choice listed twice");
                let letter = i | mv.choice.output << 2;
                let t = *g.kind(mv.target as usize).regular().unwrap();
                let env_ok = env.step(st.qe, letter).is_some();
                let sys_ok = sys.step(st.qs, letter).is_some();
                assert_eq!(t.ok_e, env_ok);
                assert_eq!(t.ok_s, sys_ok);
                assert_eq!(mv.choice.env_recover.is_some(), !env_ok);
                assert_eq!(mv.choice.sys_recover.is_some(), !sys_ok);
            }
        }
    }

    #[test]
    fn plain_arbiter_reaches_lose_sink() {
        let g = build_game(&arbiter(), BuildOptions::new(BuildMode::Plain)).unwrap();
        let reach = g.reachable();
        let lose = (0..g.num_states()).find(|&s| *g.kind(s) == StateKind::LoseSink);
        assert!(reach.contains(lose.unwrap()));
        let win = (0..g.num_states())
            .find(|&s| *g.kind(s) == StateKind::WinSink)
            .unwrap();
        assert!(g.pairs()[0].b.contains(win) && !g.pairs()[0].a.contains(win));
        assert!(g.pairs()[0].a.contains(lose.unwrap()));
        assert!(!g.pairs()[0].b.contains(lose.unwrap()));
        assert_eq!(g.pairs().len(), 1);
    }

    #[test]
    fn degenerate_counters_make_pair_one_trivial() {
        let g = build_game(&arbiter(), BuildOptions::new(BuildMode::Robust)).unwrap();
        assert_eq!(g.pairs()[0].a, g.all_states());
        assert_eq!(g.pairs()[0].b, g.all_states());
    }

    #[test]
    fn pr_of_extremes() {
        let g = build_game(&arbiter(), BuildOptions::new(BuildMode::Robust)).unwrap();
        assert_eq!(g.pr(&g.all_states()), g.all_states());
        assert_eq!(g.pr(&g.no_states()), g.no_states());
    }

    #[test]
    fn capacity_error() {
        let mut opts = BuildOptions::new(BuildMode::Robust);
        opts.state_cap = 3;
        assert_eq!(
            build_game(&arbiter(), opts),
            Err(GameError::Capacity { cap: 3 })
        );
    }

    #[test]
    fn absorbing_initial_reaches_only_itself() {
        let g = Game::from_parts(
            names(&["i"]),
            names(&["o"]),
            vec![StateKind::Abstract, StateKind::Abstract],
            0,
            vec![
                vec![Move {
                    choice: SysChoice::output(0),
                    target: 0,
                }],
                vec![Move {
                    choice: SysChoice::output(1),
                    target: 0,
                }],
                vec![Move {
                    choice: SysChoice::output(0),
                    target: 0,
                }],
                vec![Move {
                    choice: SysChoice::output(0),
                    target: 1,
                }],
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(g.reachable().to_vec(), [0]);
    }

    /// Counters over `m` formulas, driven by which formula holds at each step.
    fn run_counter(m: u32, holds: &[u32]) -> Vec<u32> {
        // holds[t] is a bitmask of the formulas 1..=m true at step t
        let mut x = m.min(1);
        let mut out = vec![x];
        for &h in holds {
            let sat = x == 0 || h >> (x - 1) & 1 == 1;
            x = step_counter(x, m, sat);
            out.push(x);
        }
        out
    }

    proptest! {
        #[test]
        fn counter_visits_zero_when_all_formulas_hold(m in 1u32..5, len in 1usize..40) {
            let all = (1u32 << m) - 1;
            let xs = run_counter(m, &vec![all; len]);
            // with every formula true the counter cycles through 0..=m
            for window in xs.windows((m as usize + 1).min(xs.len())) {
                if window.len() == m as usize + 1 {
                    prop_assert!(window.contains(&0));
                }
            }
        }

        #[test]
        fn counter_sticks_at_a_formula_that_never_holds(
            m in 1u32..5,
            k in 1u32..5,
            prefix in proptest::collection::vec(any::<u32>(), 0..12),
            len in 1usize..30,
        ) {
            prop_assume!(k <= m);
            let mut holds = prefix.clone();
            let all_but_k = ((1u32 << m) - 1) & !(1 << (k - 1));
            holds.extend(core::iter::repeat_n(all_but_k, len + m as usize + 1));
            let xs = run_counter(m, &holds);
            let t = prefix.len();
            if let Some(pos) = xs[t..].iter().position(|&x| x == k) {
                prop_assert!(xs[t + pos..].iter().all(|&x| x == k));
            }
        }
    }
}
