//! Recursive fixpoint solver for Streett games.
//!
//! ```text
//! main(Set)       = |Set| = 0 ? mStr(true, false) : Str(Set, true, false)
//! mStr(sng, rt)   = GFix X. rt | sng & pr(X)
//! Str(Set,sng,rt) = GFix Z. foreach <a,b> in Set:
//!                     p1 = rt | sng & b & pr(Z)
//!                     Z  = LFix Y. Sub(Set - <a,b>, sng & !a, p1 | sng & pr(Y))
//! ```
//! where `Sub` is `Str` on the remaining pairs, or `mStr` when none remain.
//!
//! Iterates are recorded in one extra pass over the pair loop after `Z` has
//! converged, so every recorded set is relative to the final `Z`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::game::Game;
use crate::stateset::StateSet;

/// Iterates of a converged solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterateRecord {
    /// The winning region.
    pub winning: StateSet,
    pub root: SubRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubRecord {
    Str(StrRecord),
    MStr(MStrRecord),
}

impl SubRecord {
    /// The set this call returned.
    pub fn result(&self) -> &StateSet {
        match self {
            SubRecord::Str(r) => &r.z,
            SubRecord::MStr(r) => &r.region,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MStrRecord {
    pub sng: StateSet,
    pub rt: StateSet,
    pub region: StateSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrRecord {
    pub sng: StateSet,
    pub rt: StateSet,
    /// Converged outer fixpoint.
    pub z: StateSet,
    /// One entry per pair, in processing order.
    pub pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    /// Index of the pair in the game.
    pub pair: usize,
    /// `rt | sng & b & pr(Z)`.
    pub target: StateSet,
    /// `Y_0 = {} ⊆ Y_1 ⊆ ... ⊆ Y_C`.
    pub iterates: Vec<Iterate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iterate {
    pub set: StateSet,
    /// The sub-call that produced this iterate; `None` for `Y_0`.
    pub sub: Option<Box<SubRecord>>,
}

/// Greatest fixpoint of `X = rt | sng & pr(X)`.
pub fn m_str(g: &Game, sng: &StateSet, rt: &StateSet) -> StateSet {
    let mut x = g.all_states();
    loop {
        let next = rt | &(sng & &g.pr(&x));
        if next == x {
            return x;
        }
        x = next;
    }
}

/// `Str(pairs, sng, rt)` over the game pairs listed in `pairs`.
pub fn str_solve(g: &Game, pairs: &[usize], sng: &StateSet, rt: &StateSet) -> StateSet {
    assert!(!pairs.is_empty(), "Str needs at least one pair");
    let mut z = g.all_states();
    loop {
        let before = z.clone();
        for k in 0..pairs.len() {
            z = pair_fixpoint(g, pairs, k, sng, rt, &z);
        }
        if z == before {
            return z;
        }
    }
}

fn rest(pairs: &[usize], k: usize) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &p)| p)
        .collect()
}

/// The least fixpoint for pair `pairs[k]` given the current `z`.
fn pair_fixpoint(
    g: &Game,
    pairs: &[usize],
    k: usize,
    sng: &StateSet,
    rt: &StateSet,
    z: &StateSet,
) -> StateSet {
    let pair = &g.pairs()[pairs[k]];
    let others = rest(pairs, k);
    let p1 = rt | &(&(sng & &pair.b) & &g.pr(z));
    let sub_sng = sng.difference(&pair.a);
    let mut y = g.no_states();
    loop {
        let p2 = &p1 | &(sng & &g.pr(&y));
        let next = if others.is_empty() {
            m_str(g, &sub_sng, &p2)
        } else {
            str_solve(g, &others, &sub_sng, &p2)
        };
        if next == y {
            return y;
        }
        y = next;
    }
}

fn record_m_str(g: &Game, sng: &StateSet, rt: &StateSet) -> MStrRecord {
    MStrRecord {
        sng: sng.clone(),
        rt: rt.clone(),
        region: m_str(g, sng, rt),
    }
}

/// Solves `Str(pairs, sng, rt)` and replays the pair loop once at the
/// converged `Z`, recording every iterate.
pub fn record_str(g: &Game, pairs: &[usize], sng: &StateSet, rt: &StateSet) -> StrRecord {
    let z = str_solve(g, pairs, sng, rt);
    let mut records = Vec::with_capacity(pairs.len());
    for k in 0..pairs.len() {
        let pair = &g.pairs()[pairs[k]];
        let others = rest(pairs, k);
        let target = rt | &(&(sng & &pair.b) & &g.pr(&z));
        let sub_sng = sng.difference(&pair.a);
        let mut iterates = Vec::new();
        let mut y = g.no_states();
        iterates.push(Iterate {
            set: y.clone(),
            sub: None,
        });
        loop {
            let p2 = &target | &(sng & &g.pr(&y));
            let sub = if others.is_empty() {
                SubRecord::MStr(record_m_str(g, &sub_sng, &p2))
            } else {
                SubRecord::Str(record_str(g, &others, &sub_sng, &p2))
            };
            let next = sub.result().clone();
            if next == y {
                break;
            }
            iterates.push(Iterate {
                set: next.clone(),
                sub: Some(Box::new(sub)),
            });
            y = next;
        }
        records.push(PairRecord {
            pair: pairs[k],
            target,
            iterates,
        });
    }
    StrRecord {
        sng: sng.clone(),
        rt: rt.clone(),
        z,
        pairs: records,
    }
}

/// Winning region of the system together with the final-pass iterates.
pub fn main_streett(g: &Game) -> IterateRecord {
    let all = g.all_states();
    let none = g.no_states();
    if g.pairs().is_empty() {
        let rec = record_m_str(g, &all, &none);
        return IterateRecord {
            winning: rec.region.clone(),
            root: SubRecord::MStr(rec),
        };
    }
    let pairs: Vec<usize> = (0..g.pairs().len()).collect();
    let rec = record_str(g, &pairs, &all, &none);
    IterateRecord {
        winning: rec.z.clone(),
        root: SubRecord::Str(rec),
    }
}

/// Winning region only.
pub fn winning_region(g: &Game) -> StateSet {
    if g.pairs().is_empty() {
        m_str(g, &g.all_states(), &g.no_states())
    } else {
        let pairs: Vec<usize> = (0..g.pairs().len()).collect();
        str_solve(g, &pairs, &g.all_states(), &g.no_states())
    }
}

/// A structural property of a record that failed to hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordViolation(pub &'static str);

impl core::fmt::Display for RecordViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.0)
    }
}

impl IterateRecord {
    /// Iterates increase, the last iterate of every top-level pair is the
    /// winning region, and nested iterates stay inside their enclosing one.
    pub fn check(&self) -> Result<(), RecordViolation> {
        check_sub(&self.root)?;
        if let SubRecord::Str(r) = &self.root {
            for p in &r.pairs {
                if p.iterates.last().map(|i| &i.set) != Some(&self.winning) {
                    return Err(RecordViolation("last top-level iterate differs from W"));
                }
            }
        }
        Ok(())
    }
}

fn check_sub(rec: &SubRecord) -> Result<(), RecordViolation> {
    let SubRecord::Str(r) = rec else {
        return Ok(());
    };
    for p in &r.pairs {
        if p.iterates.first().is_none_or(|i| !i.set.is_empty()) {
            return Err(RecordViolation("first iterate is not empty"));
        }
        for w in p.iterates.windows(2) {
            if !w[0].set.is_subset(&w[1].set) || w[0].set == w[1].set {
                return Err(RecordViolation("iterates are not strictly increasing"));
            }
        }
        if p.iterates.last().map(|i| &i.set) != Some(&r.z) {
            return Err(RecordViolation("last iterate differs from converged Z"));
        }
        for it in &p.iterates {
            if let Some(sub) = &it.sub {
                if sub.result() != &it.set {
                    return Err(RecordViolation("sub-call result differs from its iterate"));
                }
                if let SubRecord::Str(inner) = sub.as_ref() {
                    for ip in &inner.pairs {
                        if ip.iterates.iter().any(|ii| !ii.set.is_subset(&it.set)) {
                            return Err(RecordViolation("inner iterate escapes its iterate"));
                        }
                    }
                }
                check_sub(sub)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Move, StateKind, StreettPair, SysChoice};
    use alloc::string::ToString;
    use alloc::vec;

    /// One input bit, one output bit; `succ[s][i]` lists targets by output.
    fn small_game(succ: &[[&[u32]; 2]], pairs: Vec<StreettPair>) -> Game {
        let mut moves = Vec::new();
        for row in succ {
            for targets in row {
                moves.push(
                    targets
                        .iter()
                        .enumerate()
                        .map(|(o, &t)| Move {
                            choice: SysChoice::output(o as u64),
                            target: t,
                        })
                        .collect(),
                );
            }
        }
        Game::from_parts(
            vec!["i".to_string()],
            vec!["o".to_string()],
            vec![StateKind::Abstract; succ.len()],
            0,
            moves,
            pairs,
        )
        .unwrap()
    }

    #[test]
    fn m_str_extremes() {
        let g = small_game(&[[&[0, 1], &[1]], [&[0], &[1]]], vec![]);
        assert_eq!(m_str(&g, &g.all_states(), &g.no_states()), g.all_states());
        let r = StateSet::from_indices(2, [1]);
        assert_eq!(m_str(&g, &g.no_states(), &r), r);
    }

    #[test]
    fn zero_pairs_total_game_wins_everywhere() {
        let g = small_game(&[[&[0, 1], &[1]], [&[0], &[1]]], vec![]);
        let rec = main_streett(&g);
        assert_eq!(rec.winning, g.all_states());
        rec.check().unwrap();
    }

    #[test]
    fn trivial_pair_wins_everywhere() {
        let all = StateSet::full(2);
        let g = small_game(
            &[[&[0, 1], &[1]], [&[0], &[1]]],
            vec![StreettPair {
                a: all.clone(),
                b: all,
            }],
        );
        let rec = main_streett(&g);
        assert_eq!(rec.winning, g.all_states());
        rec.check().unwrap();
    }

    #[test]
    fn unavoidable_a_without_b_loses() {
        let g = small_game(
            &[[&[0, 1], &[1]], [&[0], &[1]]],
            vec![StreettPair {
                a: StateSet::full(2),
                b: StateSet::empty(2),
            }],
        );
        assert!(main_streett(&g).winning.is_empty());
    }

    #[test]
    fn system_picks_the_good_loop() {
        // state 1 is bad (a without b); the system can stay in 0 by output 0
        let g = small_game(
            &[[&[0, 1], &[0, 1]], [&[1], &[1]]],
            vec![StreettPair {
                a: StateSet::from_indices(2, [1]),
                b: StateSet::empty(2),
            }],
        );
        let rec = main_streett(&g);
        assert_eq!(rec.winning.to_vec(), [0]);
        rec.check().unwrap();
    }

    #[test]
    fn environment_forces_the_bad_loop() {
        // on input 1 state 0 can only go to state 1
        let g = small_game(
            &[[&[0, 1], &[1]], [&[1], &[1]]],
            vec![StreettPair {
                a: StateSet::from_indices(2, [1]),
                b: StateSet::empty(2),
            }],
        );
        assert!(main_streett(&g).winning.is_empty());
    }
}
