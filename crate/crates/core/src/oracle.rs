//! Ground truth for tests: brute-force winning regions on tiny games, exact
//! model checking of machines against games, and seeded random games.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{Game, Move, StateKind, StreettPair, SysChoice};
use crate::sim::matching_moves;
use crate::stateset::StateSet;
use crate::strategy::MealyMachine;

pub const BRUTE_FORCE_MAX_STATES: usize = 15;
pub const BRUTE_FORCE_MAX_INPUTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    TooLarge { states: usize, inputs: usize },
    NotTotal { state: usize, input: u64 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { states, inputs } => write!(
                f,
                "game with {states} states and {inputs} inputs exceeds the brute-force limit \
                 of {BRUTE_FORCE_MAX_STATES} states and {BRUTE_FORCE_MAX_INPUTS} inputs"
            ),
            OracleError::NotTotal { state, input } => {
                write!(f, "state {state} has no move on input {input}")
            }
        }
    }
}

impl core::error::Error for OracleError {}

type Mask = u16;

fn mask_of(set: &StateSet) -> Mask {
    set.iter().fold(0, |m, s| m | 1 << s)
}

fn set_of(mask: Mask, n: usize) -> StateSet {
    StateSet::from_fn(n, |s| mask >> s & 1 == 1)
}

/// States reachable from `from` through `succ`, restricted to `within`.
fn reach(from: Mask, succ: &[Mask], within: Mask) -> Mask {
    let mut seen = from & within;
    let mut frontier = seen;
    while frontier != 0 {
        let mut next = 0;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= succ[v];
        }
        next &= within & !seen;
        seen |= next;
        frontier = next;
    }
    seen
}

fn reach_back(to: Mask, succ: &[Mask], within: Mask) -> Mask {
    let mut seen = to & within;
    loop {
        let mut grown = seen;
        let mut w = within & !seen;
        while w != 0 {
            let v = w.trailing_zeros() as usize;
            w &= w - 1;
            if succ[v] & seen != 0 {
                grown |= 1 << v;
            }
        }
        if grown == seen {
            return seen;
        }
        seen = grown;
    }
}

/// States of `within` lying in some strongly connected set that visits
/// `b_k` whenever it visits `a_k`.
fn good_core(within: Mask, succ: &[Mask], pairs: &[(Mask, Mask)]) -> Mask {
    let mut result = 0;
    let mut left = within;
    while left != 0 {
        let v = left.trailing_zeros() as usize;
        let scc = reach(1 << v, succ, within) & reach_back(1 << v, succ, within);
        left &= !scc;
        let nontrivial = scc.count_ones() > 1 || succ[v] >> v & 1 == 1;
        if !nontrivial {
            continue;
        }
        let bad = pairs
            .iter()
            .filter(|&&(a, b)| scc & a != 0 && scc & b == 0)
            .fold(0, |m, &(a, _)| m | a);
        if bad == 0 {
            result |= scc;
        } else if scc & !bad != 0 {
            result |= good_core(scc & !bad, succ, pairs);
        }
    }
    result
}

/// System winning region by enumerating every memoryless environment
/// strategy. An input whose successors include those of another input is
/// never needed by the environment and is skipped.
pub fn brute_force_region(g: &Game) -> Result<StateSet, OracleError> {
    let n = g.num_states();
    let ni = g.num_inputs();
    if n > BRUTE_FORCE_MAX_STATES || ni > BRUTE_FORCE_MAX_INPUTS {
        return Err(OracleError::TooLarge {
            states: n,
            inputs: ni,
        });
    }
    let mut options: Vec<Vec<Mask>> = Vec::with_capacity(n);
    for s in 0..n {
        let mut masks: Vec<Mask> = Vec::new();
        for i in 0..ni as u64 {
            let m = g.successors(s, i).iter().fold(0, |m, &t| m | 1 << t);
            if m == 0 {
                return Err(OracleError::NotTotal { state: s, input: i });
            }
            masks.push(m);
        }
        masks.sort_unstable();
        masks.dedup();
        let kept: Vec<Mask> = masks
            .iter()
            .copied()
            .filter(|&m| !masks.iter().any(|&o| o != m && o & !m == 0))
            .collect();
        options.push(kept);
    }
    let pairs: Vec<(Mask, Mask)> = g
        .pairs()
        .iter()
        .map(|p| (mask_of(&p.a), mask_of(&p.b)))
        .collect();
    let all: Mask = (1 << n) - 1;

    let mut region = all;
    let mut pick = vec![0usize; n];
    let mut succ: Vec<Mask> = options.iter().map(|o| o[0]).collect();
    loop {
        let core = good_core(all, &succ, &pairs);
        region &= reach_back(core, &succ, all);
        if region == 0 {
            break;
        }
        // odometer over the per-state options
        let mut k = 0;
        while k < n {
            pick[k] += 1;
            if pick[k] < options[k].len() {
                succ[k] = options[k][pick[k]];
                break;
            }
            pick[k] = 0;
            succ[k] = options[k][0];
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(set_of(region, n))
}

/// System winning region by the literal definition: for each memoryless
/// environment strategy, every reachable strongly connected set is checked
/// against the pairs. Exponential in the number of states; for cross-checks.
pub fn subset_enumeration_region(g: &Game) -> Result<StateSet, OracleError> {
    let n = g.num_states();
    let ni = g.num_inputs();
    if n > 10 || ni > BRUTE_FORCE_MAX_INPUTS {
        return Err(OracleError::TooLarge {
            states: n,
            inputs: ni,
        });
    }
    let pairs: Vec<(Mask, Mask)> = g
        .pairs()
        .iter()
        .map(|p| (mask_of(&p.a), mask_of(&p.b)))
        .collect();
    let all: Mask = (1 << n) - 1;
    let mut region = all;
    let total = ni.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut succ = vec![0 as Mask; n];
        for (s, m) in succ.iter_mut().enumerate() {
            let i = (c % ni) as u64;
            c /= ni;
            *m = g.successors(s, i).iter().fold(0, |m, &t| m | 1 << t);
            if *m == 0 {
                return Err(OracleError::NotTotal { state: s, input: i });
            }
        }
        let mut win = 0;
        for u in 1..=all {
            let good = pairs.iter().all(|&(a, b)| u & a == 0 || u & b != 0);
            if !good || !strongly_connected(u, &succ) {
                continue;
            }
            win |= reach_back(u, &succ, all);
        }
        region &= win;
    }
    Ok(set_of(region, n))
}

/// `u` is nonempty, strongly connected, and every state has a successor in it.
fn strongly_connected(u: Mask, succ: &[Mask]) -> bool {
    let v = u.trailing_zeros() as usize;
    let mut w = u;
    while w != 0 {
        let s = w.trailing_zeros() as usize;
        w &= w - 1;
        if succ[s] & u == 0 {
            return false;
        }
    }
    reach(1 << v, succ, u) == u && reach_back(1 << v, succ, u) == u
}

/// A product state of a machine and a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductState {
    pub machine: u32,
    pub game: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LassoStep {
    pub state: ProductState,
    /// Input taken from `state`.
    pub input: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sound,
    /// An infinite closed-loop play repeating `cycle` visits `a` of `pair`
    /// infinitely often and `b` never.
    Violation {
        pair: usize,
        prefix: Vec<LassoStep>,
        cycle: Vec<LassoStep>,
    },
}

impl Verdict {
    pub fn is_sound(&self) -> bool {
        matches!(self, Verdict::Sound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoundnessError {
    /// The machine references a game state or move the game does not have.
    ProductMismatch {
        machine: u32,
        game: u32,
        input: Option<u64>,
    },
    InputMismatch,
}

impl fmt::Display for SoundnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SoundnessError::ProductMismatch {
                machine,
                game,
                input,
            } => {
                write!(
                    f,
                    "machine state {machine} does not match game state {game}"
                )?;
                if let Some(i) = input {
                    write!(f, " on input {i}")?;
                }
                Ok(())
            }
            SoundnessError::InputMismatch => {
                f.write_str("machine and game have different input signals")
            }
        }
    }
}

impl core::error::Error for SoundnessError {}

/// Explicit closed-loop product: nodes, and for each node its `(input, succ)`
/// edges in input order.
pub struct Product {
    pub nodes: Vec<ProductState>,
    pub edges: Vec<Vec<(u64, u32)>>,
}

/// Product of `mach` and `g` reachable from both initial states. Where the
/// machine does not fix a recovery choice every matching game move is kept.
pub fn closed_loop(g: &Game, mach: &MealyMachine) -> Result<Product, SoundnessError> {
    if mach.inputs() != g.inputs() {
        return Err(SoundnessError::InputMismatch);
    }
    let start = ProductState {
        machine: mach.initial(),
        game: g.initial(),
    };
    let mut index = BTreeMap::new();
    index.insert(start, 0u32);
    let mut nodes = vec![start];
    let mut edges = Vec::new();
    let mut head = 0;
    while head < nodes.len() {
        let p = nodes[head];
        head += 1;
        let mismatch = |input| SoundnessError::ProductMismatch {
            machine: p.machine,
            game: p.game,
            input,
        };
        let ms = &mach.states()[p.machine as usize];
        if ms.game_state.is_some_and(|s| s != p.game) {
            return Err(mismatch(None));
        }
        let mut out = Vec::new();
        for input in 0..mach.num_inputs() as u64 {
            let t = mach.transition(p.machine as usize, input);
            let mut any = false;
            for m in matching_moves(g, p.game as usize, input, t) {
                any = true;
                let q = ProductState {
                    machine: t.next,
                    game: m.target,
                };
                let id = *index.entry(q).or_insert_with(|| {
                    nodes.push(q);
                    (nodes.len() - 1) as u32
                });
                if !out.contains(&(input, id)) {
                    out.push((input, id));
                }
            }
            if !any {
                return Err(mismatch(Some(input)));
            }
        }
        edges.push(out);
    }
    Ok(Product { nodes, edges })
}

/// Strongly connected components of the subgraph on `alive`, as component
/// ids (`u32::MAX` for dead nodes).
fn tarjan(edges: &[Vec<(u64, u32)>], alive: &[bool]) -> Vec<u32> {
    let n = edges.len();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut counter = 0u32;
    let mut comps = 0u32;
    for root in 0..n {
        if !alive[root] || index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, k)) = call.last() {
            if k < edges[v].len() {
                let w = edges[v][k].1 as usize;
                call.last_mut().expect("nonempty").1 += 1;
                if !alive[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = comps;
                        if w == v {
                            break;
                        }
                    }
                    comps += 1;
                }
            }
        }
    }
    comp
}

/// Shortest path from `from` to `to` inside `allowed`, as lasso steps
/// (excluding `to` itself). For `from == to` a nonempty cycle is returned.
fn path(
    prod: &Product,
    from: usize,
    to: usize,
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<LassoStep>> {
    let n = prod.nodes.len();
    let mut parent: Vec<Option<(usize, u64)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    queue.push_back(from);
    // `from` is marked only when it is not also the target
    if from != to {
        seen[from] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &(input, w) in &prod.edges[v] {
            let w = w as usize;
            if seen[w] || !allowed(w) {
                continue;
            }
            seen[w] = true;
            parent[w] = Some((v, input));
            if w == to {
                let mut steps = Vec::new();
                let mut cur = to;
                while let Some((p, input)) = parent[cur] {
                    steps.push(LassoStep {
                        state: prod.nodes[p],
                        input,
                    });
                    cur = p;
                    if cur == from {
                        break;
                    }
                }
                steps.reverse();
                return Some(steps);
            }
            queue.push_back(w);
        }
    }
    None
}

/// Checks every infinite closed-loop play of `mach` on `g` against the
/// pairs: for each pair the `b` states are removed and a reachable cycle
/// through an `a` state is searched.
pub fn check_strategy_sound(g: &Game, mach: &MealyMachine) -> Result<Verdict, SoundnessError> {
    let prod = closed_loop(g, mach)?;
    let n = prod.nodes.len();
    for (k, pair) in g.pairs().iter().enumerate() {
        let alive: Vec<bool> = prod
            .nodes
            .iter()
            .map(|p| !pair.b.contains(p.game as usize))
            .collect();
        let comp = tarjan(&prod.edges, &alive);
        let mut size = BTreeMap::new();
        for &c in comp.iter().filter(|&&c| c != u32::MAX) {
            *size.entry(c).or_insert(0usize) += 1;
        }
        let cyclic = |v: usize| {
            comp[v] != u32::MAX
                && (size[&comp[v]] > 1 || prod.edges[v].iter().any(|&(_, w)| w as usize == v))
        };
        let Some(v) = (0..n).find(|&v| pair.a.contains(prod.nodes[v].game as usize) && cyclic(v))
        else {
            continue;
        };
        let prefix = if v == 0 {
            Vec::new()
        } else {
            path(&prod, 0, v, |_| true).expect("product nodes are reachable")
        };
        let cycle = path(&prod, v, v, |w| comp[w] == comp[v]).expect("cyclic component");
        return Ok(Verdict::Violation {
            pair: k,
            prefix,
            cycle,
        });
    }
    Ok(Verdict::Sound)
}

/// Parameters of [`random_game`]; sizes are drawn uniformly up to the maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomGameParams {
    pub max_states: usize,
    pub max_input_bits: usize,
    pub max_output_bits: usize,
    pub pairs: usize,
}

impl Default for RandomGameParams {
    fn default() -> Self {
        RandomGameParams {
            max_states: 12,
            max_input_bits: 2,
            max_output_bits: 2,
            pairs: 2,
        }
    }
}

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> StateSet {
    let density = [0.15, 0.3, 0.5][rng.gen_range(0..3)];
    StateSet::from_fn(n, |_| rng.gen_bool(density))
}

/// A total random game: every state, input and output valuation has one
/// random successor.
pub fn random_game(seed: u64, params: RandomGameParams) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=params.max_states.max(1));
    let ni = rng.gen_range(0..=params.max_input_bits);
    let no = rng.gen_range(0..=params.max_output_bits);
    let name = |p: &str, k: usize| alloc::format!("{p}{k}");
    let moves = (0..n << ni)
        .map(|_| {
            (0..1u64 << no)
                .map(|o| Move {
                    choice: SysChoice::output(o),
                    target: rng.gen_range(0..n as u32),
                })
                .collect()
        })
        .collect();
    let pairs = (0..params.pairs)
        .map(|_| StreettPair {
            a: random_set(&mut rng, n),
            b: random_set(&mut rng, n),
        })
        .collect();
    Game::from_parts(
        (0..ni).map(|k| name("i", k)).collect(),
        (0..no).map(|k| name("o", k)).collect(),
        vec![StateKind::Abstract; n],
        0,
        moves,
        pairs,
    )
    .expect("random games are well formed")
}
