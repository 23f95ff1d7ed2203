//! Boolean expressions over signals and the valuations they are evaluated on.
//!
//! Signals are referred to by their global index in a specification: inputs
//! first, then outputs. A *letter* is a full valuation packed into a `u64`
//! with bit `k` holding the value of signal `k`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Largest number of signals a letter can carry.
pub const MAX_SIGNALS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolExpr {
    Const(bool),
    /// Value of a signal in the current step.
    Var(usize),
    /// Value of a signal in the next step. Only meaningful inside invariants.
    Next(usize),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
    Iff(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn var(idx: usize) -> Self {
        BoolExpr::Var(idx)
    }

    pub fn next(idx: usize) -> Self {
        BoolExpr::Next(idx)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction of all expressions, `true` when empty.
    pub fn all<I: IntoIterator<Item = BoolExpr>>(items: I) -> Self {
        items
            .into_iter()
            .reduce(BoolExpr::and)
            .unwrap_or(BoolExpr::Const(true))
    }

    /// Conjunction of literals fixing the signals in `mask` to the bits of `letter`.
    pub fn cube(mask: u64, letter: u64) -> Self {
        BoolExpr::all(bits(mask).map(|k| {
            if letter >> k & 1 == 1 {
                BoolExpr::Var(k)
            } else {
                BoolExpr::not(BoolExpr::Var(k))
            }
        }))
    }

    /// Evaluates with `cur` as the current letter and `next` as the following one.
    pub fn eval2(&self, cur: u64, next: u64) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(k) => cur >> k & 1 == 1,
            BoolExpr::Next(k) => next >> k & 1 == 1,
            BoolExpr::Not(e) => !e.eval2(cur, next),
            BoolExpr::And(a, b) => a.eval2(cur, next) && b.eval2(cur, next),
            BoolExpr::Or(a, b) => a.eval2(cur, next) || b.eval2(cur, next),
            BoolExpr::Implies(a, b) => !a.eval2(cur, next) || b.eval2(cur, next),
            BoolExpr::Iff(a, b) => a.eval2(cur, next) == b.eval2(cur, next),
        }
    }

    /// Evaluates an expression without next-step references on a letter.
    pub fn eval_letter(&self, letter: u64) -> bool {
        self.eval2(letter, 0)
    }

    pub fn has_next(&self) -> bool {
        self.next_support() != 0
    }

    /// Signals read in the current step.
    pub fn current_support(&self) -> u64 {
        self.fold_support(false)
    }

    /// Signals read in the next step.
    pub fn next_support(&self) -> u64 {
        self.fold_support(true)
    }

    /// Every signal the expression mentions, in either step.
    pub fn support(&self) -> u64 {
        self.current_support() | self.next_support()
    }

    fn fold_support(&self, next: bool) -> u64 {
        match self {
            BoolExpr::Const(_) => 0,
            BoolExpr::Var(k) => {
                if next {
                    0
                } else {
                    1 << k
                }
            }
            BoolExpr::Next(k) => {
                if next {
                    1 << k
                } else {
                    0
                }
            }
            BoolExpr::Not(e) => e.fold_support(next),
            BoolExpr::And(a, b)
            | BoolExpr::Or(a, b)
            | BoolExpr::Implies(a, b)
            | BoolExpr::Iff(a, b) => a.fold_support(next) | b.fold_support(next),
        }
    }

    /// Largest signal index mentioned, if any.
    pub fn max_signal(&self) -> Option<usize> {
        match self {
            BoolExpr::Const(_) => None,
            BoolExpr::Var(k) | BoolExpr::Next(k) => Some(*k),
            BoolExpr::Not(e) => e.max_signal(),
            BoolExpr::And(a, b)
            | BoolExpr::Or(a, b)
            | BoolExpr::Implies(a, b)
            | BoolExpr::Iff(a, b) => a.max_signal().max(b.max_signal()),
        }
    }

    /// Shifts every current-step reference to the next step.
    pub fn to_next(&self) -> Result<BoolExpr, NestedNext> {
        Ok(match self {
            BoolExpr::Const(b) => BoolExpr::Const(*b),
            BoolExpr::Var(k) => BoolExpr::Next(*k),
            BoolExpr::Next(_) => return Err(NestedNext),
            BoolExpr::Not(e) => BoolExpr::not(e.to_next()?),
            BoolExpr::And(a, b) => BoolExpr::and(a.to_next()?, b.to_next()?),
            BoolExpr::Or(a, b) => BoolExpr::or(a.to_next()?, b.to_next()?),
            BoolExpr::Implies(a, b) => BoolExpr::implies(a.to_next()?, b.to_next()?),
            BoolExpr::Iff(a, b) => BoolExpr::iff(a.to_next()?, b.to_next()?),
        })
    }

    /// Renders the expression in the textual spec syntax.
    pub fn display<'a, S: AsRef<str>>(&'a self, names: &'a [S]) -> DisplayExpr<'a, S> {
        DisplayExpr { expr: self, names }
    }
}

/// `X` applied to an expression that already refers to the next step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedNext;

impl fmt::Display for NestedNext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("nested next-step operator")
    }
}

pub struct DisplayExpr<'a, S> {
    expr: &'a BoolExpr,
    names: &'a [S],
}

impl<S: AsRef<str>> DisplayExpr<'_, S> {
    fn name(&self, k: usize) -> &str {
        self.names.get(k).map(|s| s.as_ref()).unwrap_or("?")
    }

    fn write(&self, e: &BoolExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            BoolExpr::Const(true) => f.write_str("true"),
            BoolExpr::Const(false) => f.write_str("false"),
            BoolExpr::Var(k) => f.write_str(self.name(*k)),
            BoolExpr::Next(k) => write!(f, "X({})", self.name(*k)),
            BoolExpr::Not(inner) => {
                f.write_str("!")?;
                self.write_atom(inner, f)
            }
            BoolExpr::And(a, b) => self.write_bin(a, " & ", b, f),
            BoolExpr::Or(a, b) => self.write_bin(a, " | ", b, f),
            BoolExpr::Implies(a, b) => self.write_bin(a, " -> ", b, f),
            BoolExpr::Iff(a, b) => self.write_bin(a, " <-> ", b, f),
        }
    }

    fn write_bin(
        &self,
        a: &BoolExpr,
        op: &str,
        b: &BoolExpr,
        f: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        self.write_atom(a, f)?;
        f.write_str(op)?;
        self.write_atom(b, f)
    }

    fn write_atom(&self, e: &BoolExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            BoolExpr::Const(_) | BoolExpr::Var(_) | BoolExpr::Next(_) | BoolExpr::Not(_) => {
                self.write(e, f)
            }
            _ => {
                f.write_str("(")?;
                self.write(e, f)?;
                f.write_str(")")
            }
        }
    }
}

impl<S: AsRef<str>> fmt::Display for DisplayExpr<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

/// Total assignment of Boolean values to the signals in `domain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation {
    domain: u64,
    bits: u64,
}

impl Valuation {
    /// Builds a valuation; bits outside `domain` are dropped.
    pub fn new(domain: u64, bits: u64) -> Self {
        Valuation {
            domain,
            bits: bits & domain,
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, bool)>>(pairs: I) -> Self {
        let mut v = Valuation { domain: 0, bits: 0 };
        for (k, b) in pairs {
            v.domain |= 1 << k;
            if b {
                v.bits |= 1 << k;
            }
        }
        v
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, k: usize) -> Option<bool> {
        (self.domain >> k & 1 == 1).then(|| self.bits >> k & 1 == 1)
    }

    /// Union of two valuations over disjoint domains.
    pub fn join(&self, other: &Valuation) -> Valuation {
        Valuation {
            domain: self.domain | other.domain,
            bits: self.bits | other.bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// The expression reads a signal the valuation does not assign.
    Unbound(usize),
    /// The expression contains a next-step reference.
    NextStep(usize),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unbound(k) => write!(f, "signal #{k} is not bound by the valuation"),
            EvalError::NextStep(k) => write!(f, "next-step reference to signal #{k}"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Standard Boolean semantics of `e` under `v`.
pub fn eval_expr(e: &BoolExpr, v: &Valuation) -> Result<bool, EvalError> {
    if let Some(k) = bits(e.next_support()).next() {
        return Err(EvalError::NextStep(k));
    }
    if let Some(k) = bits(e.current_support() & !v.domain).next() {
        return Err(EvalError::Unbound(k));
    }
    Ok(e.eval_letter(v.bits))
}

/// Indices of the set bits of `mask`, ascending.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    core::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let k = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(k)
        }
    })
}

/// Valuations of `count` consecutive signals starting at bit `offset`, in
/// lexicographic order of the tuple (first signal, second signal, ...).
pub fn lex_valuations(count: usize, offset: usize) -> impl Iterator<Item = u64> {
    (0..1u64 << count).map(move |t| {
        let mut v = 0u64;
        for j in 0..count {
            if t >> (count - 1 - j) & 1 == 1 {
                v |= 1 << (offset + j);
            }
        }
        v
    })
}

/// Sort key that orders valuations over `count` signals lexicographically
/// with the first signal most significant.
pub fn lex_key(v: u64, count: usize) -> u64 {
    let mut key = 0;
    for j in 0..count {
        key = key << 1 | (v >> j & 1);
    }
    key
}

/// Formats a valuation as `name=bit` pairs.
pub fn format_valuation<S: AsRef<str>>(v: u64, names: &[S]) -> String {
    let mut out = String::new();
    for (k, name) in names.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        out.push_str(name.as_ref());
        out.push('=');
        out.push(if v >> k & 1 == 1 { '1' } else { '0' });
    }
    out
}

pub(crate) fn collect_bits(mask: u64) -> Vec<usize> {
    bits(mask).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    // r1 = 0, r2 = 1, r = 0, g = 1 in the two small examples below
    #[test]
    fn eval_examples() {
        let e = BoolExpr::not(BoolExpr::and(BoolExpr::var(0), BoolExpr::var(1)));
        let v = Valuation::from_pairs([(0, true), (1, false)]);
        assert_eq!(eval_expr(&e, &v), Ok(true));

        let (r, g) = (BoolExpr::var(0), BoolExpr::var(1));
        let hs = BoolExpr::or(
            BoolExpr::and(r.clone(), g.clone()),
            BoolExpr::and(BoolExpr::not(r), BoolExpr::not(g)),
        );
        let v = Valuation::from_pairs([(0, false), (1, false)]);
        assert_eq!(eval_expr(&hs, &v), Ok(true));

        assert_eq!(eval_expr(&BoolExpr::Const(false), &v), Ok(false));
        assert_eq!(
            eval_expr(&BoolExpr::Const(false), &Valuation::new(0, 0)),
            Ok(false)
        );
    }

    #[test]
    fn eval_errors() {
        let v = Valuation::from_pairs([(0, true)]);
        assert_eq!(eval_expr(&BoolExpr::var(3), &v), Err(EvalError::Unbound(3)));
        assert_eq!(
            eval_expr(&BoolExpr::next(0), &v),
            Err(EvalError::NextStep(0))
        );
    }

    #[test]
    fn lex_order_puts_first_signal_first() {
        let vals: Vec<u64> = lex_valuations(2, 1).collect();
        // (s1,s2) = 00, 01, 10, 11 with s1 at bit 1 and s2 at bit 2
        assert_eq!(vals, [0b000, 0b100, 0b010, 0b110]);
        let mut sorted = vals.clone();
        sorted.sort_by_key(|&v| lex_key(v >> 1, 2));
        assert_eq!(sorted, vals);
    }

    #[test]
    fn display_round_trips_precedence() {
        let names = ["a", "b", "c"];
        let e = BoolExpr::implies(
            BoolExpr::and(BoolExpr::var(0), BoolExpr::not(BoolExpr::var(1))),
            BoolExpr::next(2),
        );
        assert_eq!(e.display(&names).to_string(), "(a & !b) -> X(c)");
    }

    #[test]
    fn supports() {
        let e = BoolExpr::implies(BoolExpr::var(0), BoolExpr::next(3));
        assert_eq!(e.current_support(), 0b1);
        assert_eq!(e.next_support(), 0b1000);
        assert!(e.has_next());
        assert_eq!(e.max_signal(), Some(3));
    }
}
