//! Line-oriented text format for GR(1) specifications.
//!
//! ```text
//! inputs:  r1 r2
//! outputs: g1 g2
//! env_safety_inv: !(r1 & r2)
//! sys_safety_inv: r1 -> X(g1)
//! sys_fair: g1 | g2
//! sys_safety_automaton:
//!   states: s0 s1 ; init: s0
//!   trans: s0 -(!g1)-> s0 ; trans: s0 -(g1)-> s1
//!   trans: s1 -(true)-> s1
//! ```
//!
//! `#` starts a comment. Statements start at column 1; indented lines
//! continue the previous statement. Operators bind `!`, `&`, `|`, `->`
//! (right associative), `<->` from tightest to loosest.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use gr1_core::automaton::{invariant_to_automaton, AutomatonError, SafetyAutomaton, Transition};
use gr1_core::expr::{format_valuation, BoolExpr};
use gr1_core::spec::{Gr1Spec, Role, SpecError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Arrow,
    Iff,
    LParen,
    RParen,
    Colon,
    Semi,
    Minus,
    /// End of a source line inside a multi-line statement.
    Eol,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Not => f.write_str("`!`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Iff => f.write_str("`<->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Eol => f.write_str("end of line"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

struct Line {
    indented: bool,
    tokens: Vec<Token>,
    end: Pos,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex_line(number: usize, text: &str) -> Result<Line, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let pos = Pos {
            line: number,
            col: k + 1,
        };
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let (tok, len) = match c {
            '!' => (Tok::Not, 1),
            '&' => (Tok::And, 1),
            '|' => (Tok::Or, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ':' => (Tok::Colon, 1),
            ';' => (Tok::Semi, 1),
            '-' if chars.get(k + 1) == Some(&'>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '<' if chars.get(k + 1) == Some(&'-') && chars.get(k + 2) == Some(&'>') => {
                (Tok::Iff, 3)
            }
            c if is_ident_char(c) => {
                let end = (k..chars.len())
                    .find(|&j| !is_ident_char(chars[j]))
                    .unwrap_or(chars.len());
                (Tok::Ident(chars[k..end].iter().collect()), end - k)
            }
            other => return err(pos, format!("unexpected character `{other}`")),
        };
        tokens.push(Token { tok, pos });
        k += len;
    }
    Ok(Line {
        indented: text.starts_with([' ', '\t']),
        tokens,
        end: Pos {
            line: number,
            col: chars.len() + 1,
        },
    })
}

const KEYS: &[&str] = &[
    "inputs",
    "outputs",
    "env_safety_inv",
    "sys_safety_inv",
    "env_fair",
    "sys_fair",
    "env_safety_automaton",
    "sys_safety_automaton",
];

const BLOCK_ITEMS: &[&str] = &["states", "init", "trans"];

struct Statement {
    key: String,
    key_pos: Pos,
    /// Tokens after the colon, with `Eol` between source lines.
    body: Vec<Token>,
    end: Pos,
}

fn starts_with_item(line: &Line) -> bool {
    matches!(
        (line.tokens.first(), line.tokens.get(1)),
        (Some(Token { tok: Tok::Ident(s), .. }), Some(Token { tok: Tok::Colon, .. }))
            if BLOCK_ITEMS.contains(&s.as_str())
    )
}

fn statements(text: &str) -> Result<Vec<Statement>, ParseError> {
    let mut out: Vec<Statement> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = lex_line(k + 1, raw)?;
        if line.tokens.is_empty() {
            continue;
        }
        if line.indented || starts_with_item(&line) {
            let Some(st) = out.last_mut() else {
                return err(line.tokens[0].pos, "continuation line without a statement");
            };
            st.body.push(Token {
                tok: Tok::Eol,
                pos: st.end,
            });
            st.body.extend(line.tokens);
            st.end = line.end;
            continue;
        }
        let first = &line.tokens[0];
        let key = match &first.tok {
            Tok::Ident(s) if KEYS.contains(&s.as_str()) => s.clone(),
            Tok::Ident(s) => return err(first.pos, format!("unknown declaration `{s}`")),
            t => return err(first.pos, format!("expected a declaration, found {t}")),
        };
        match line.tokens.get(1) {
            Some(Token {
                tok: Tok::Colon, ..
            }) => {}
            Some(t) => {
                return err(
                    t.pos,
                    format!("expected `:` after `{key}`, found {}", t.tok),
                )
            }
            None => return err(line.end, format!("expected `:` after `{key}`")),
        }
        out.push(Statement {
            key,
            key_pos: first.pos,
            body: line.tokens[2..].to_vec(),
            end: line.end,
        });
    }
    Ok(out)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    k: usize,
    end: Pos,
    names: &'a BTreeMap<String, usize>,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.tokens.get(self.k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.tokens.get(self.k).map_or(self.end, |t| t.pos)
    }

    fn skip_eol(&mut self) {
        while self.peek() == Some(&Tok::Eol) {
            self.k += 1;
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        self.skip_eol();
        match self.peek() {
            Some(t) if *t == want => {
                self.k += 1;
                Ok(())
            }
            Some(t) => err(self.pos(), format!("expected {want}, found {t}")),
            None => err(
                self.pos(),
                format!("expected {want}, found end of statement"),
            ),
        }
    }

    fn eat(&mut self, want: Tok) -> bool {
        self.skip_eol();
        if self.peek() == Some(&want) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<BoolExpr, ParseError> {
        let mut e = self.implies()?;
        while self.eat(Tok::Iff) {
            e = BoolExpr::iff(e, self.implies()?);
        }
        Ok(e)
    }

    fn implies(&mut self) -> Result<BoolExpr, ParseError> {
        let lhs = self.or()?;
        if self.eat(Tok::Arrow) {
            Ok(BoolExpr::implies(lhs, self.implies()?))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<BoolExpr, ParseError> {
        let mut e = self.and()?;
        while self.eat(Tok::Or) {
            e = BoolExpr::or(e, self.and()?);
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<BoolExpr, ParseError> {
        let mut e = self.unary()?;
        while self.eat(Tok::And) {
            e = BoolExpr::and(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<BoolExpr, ParseError> {
        if self.eat(Tok::Not) {
            return Ok(BoolExpr::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<BoolExpr, ParseError> {
        self.skip_eol();
        let pos = self.pos();
        match self.peek() {
            Some(Tok::LParen) => {
                self.k += 1;
                let e = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.k += 1;
                match name.as_str() {
                    "true" => return Ok(BoolExpr::Const(true)),
                    "false" => return Ok(BoolExpr::Const(false)),
                    "X" if self.peek() == Some(&Tok::LParen) => {
                        self.k += 1;
                        let inner = self.iff()?;
                        self.expect(Tok::RParen)?;
                        return inner
                            .to_next()
                            .or_else(|_| err(pos, "nested next-step operator"));
                    }
                    _ => {}
                }
                match self.names.get(name) {
                    Some(&k) => Ok(BoolExpr::var(k)),
                    None => err(pos, format!("undeclared signal `{name}`")),
                }
            }
            Some(t) => err(pos, format!("expected an expression, found {t}")),
            None => err(pos, "expected an expression, found end of statement"),
        }
    }
}

fn parse_whole_expr(
    tokens: &[Token],
    end: Pos,
    names: &BTreeMap<String, usize>,
) -> Result<BoolExpr, ParseError> {
    let mut p = ExprParser {
        tokens,
        k: 0,
        end,
        names,
    };
    let e = p.iff()?;
    p.skip_eol();
    if let Some(t) = p.peek() {
        return err(p.pos(), format!("unexpected {t} after expression"));
    }
    Ok(e)
}

/// Parses a single expression over `signals` (inputs first, then outputs).
pub fn parse_expr<S: AsRef<str>>(text: &str, signals: &[S]) -> Result<BoolExpr, ParseError> {
    let line = lex_line(1, text)?;
    let names = signals
        .iter()
        .enumerate()
        .map(|(k, s)| (s.as_ref().to_string(), k))
        .collect();
    parse_whole_expr(&line.tokens, line.end, &names)
}

fn parse_names(st: &Statement) -> Result<Vec<(String, Pos)>, ParseError> {
    st.body
        .iter()
        .filter(|t| t.tok != Tok::Eol)
        .map(|t| match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.pos)),
            other => err(t.pos, format!("expected a signal name, found {other}")),
        })
        .collect()
}

fn parse_automaton(
    st: &Statement,
    names: &BTreeMap<String, usize>,
    signals: &[String],
) -> Result<SafetyAutomaton, ParseError> {
    let mut states: Vec<(String, Pos)> = Vec::new();
    let mut init: Option<(String, Pos)> = None;
    let mut trans: Vec<(String, Pos, BoolExpr, String, Pos)> = Vec::new();

    let items = st
        .body
        .split(|t| matches!(t.tok, Tok::Semi | Tok::Eol))
        .filter(|item| !item.is_empty());
    for item in items {
        let ident = |t: &Token| match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.pos)),
            other => err(t.pos, format!("expected a state name, found {other}")),
        };
        let (head, rest) = match (&item[0].tok, item.get(1).map(|t| &t.tok)) {
            (Tok::Ident(s), Some(Tok::Colon)) if BLOCK_ITEMS.contains(&s.as_str()) => {
                (s.as_str(), &item[2..])
            }
            _ => ("trans", item),
        };
        let end = rest.last().map_or(item[item.len() - 1].pos, |t| t.pos);
        match head {
            "states" => {
                for t in rest {
                    states.push(ident(t)?);
                }
            }
            "init" => match rest {
                [t] => init = Some(ident(t)?),
                [] => return err(end, "expected the initial state"),
                [_, t, ..] => return err(t.pos, "expected a single initial state"),
            },
            _ => {
                // from -(guard)-> to
                if rest.len() < 5 {
                    return err(end, "expected a transition `from -(guard)-> to`");
                }
                let from = ident(&rest[0])?;
                let mut p = ExprParser {
                    tokens: &rest[1..],
                    k: 0,
                    end,
                    names,
                };
                p.expect(Tok::Minus)?;
                p.expect(Tok::LParen)?;
                let guard = p.iff()?;
                p.expect(Tok::RParen)?;
                p.expect(Tok::Arrow)?;
                let tail = &rest[1 + p.k..];
                let to = match tail {
                    [t] => ident(t)?,
                    [] => return err(end, "expected the target state"),
                    [_, t, ..] => return err(t.pos, format!("unexpected {}", t.tok)),
                };
                if guard.has_next() {
                    return err(from.1, "transition guards cannot use next-step references");
                }
                trans.push((from.0, from.1, guard, to.0, to.1));
            }
        }
    }
    if states.is_empty() {
        return err(st.key_pos, "automaton declares no states");
    }
    let mut index = BTreeMap::new();
    for (k, (name, pos)) in states.iter().enumerate() {
        if index.insert(name.clone(), k).is_some() {
            return err(*pos, format!("duplicate state name `{name}`"));
        }
    }
    let lookup = |name: &str, pos: Pos| match index.get(name) {
        Some(&k) => Ok(k),
        None => err(pos, format!("unknown state `{name}`")),
    };
    let initial = match &init {
        Some((name, pos)) => lookup(name, *pos)?,
        None => 0,
    };
    let mut transitions = Vec::new();
    for (from, fpos, guard, to, tpos) in trans {
        transitions.push(Transition {
            from: lookup(&from, fpos)?,
            guard,
            to: lookup(&to, tpos)?,
        });
    }
    let state_names = states.into_iter().map(|(n, _)| n).collect();
    SafetyAutomaton::new(state_names, initial, transitions).or_else(|e| match e {
        AutomatonError::Nondeterministic {
            state,
            letter,
            first,
            second,
        } => err(
            st.key_pos,
            format!(
                "nondeterministic automaton: in state `{state}` transitions #{first} and \
                 #{second} are both enabled on {}",
                format_valuation(letter, signals)
            ),
        ),
        other => err(st.key_pos, other.to_string()),
    })
}

/// Parses and validates a specification.
pub fn parse_spec(text: &str) -> Result<Gr1Spec, ParseError> {
    let stmts = statements(text)?;
    let mut inputs: Option<(Vec<(String, Pos)>, Pos)> = None;
    let mut outputs: Option<(Vec<(String, Pos)>, Pos)> = None;
    for st in &stmts {
        let slot = match st.key.as_str() {
            "inputs" => &mut inputs,
            "outputs" => &mut outputs,
            _ => continue,
        };
        if slot.is_some() {
            return err(st.key_pos, format!("`{}` declared twice", st.key));
        }
        *slot = Some((parse_names(st)?, st.key_pos));
    }
    let start = Pos { line: 1, col: 1 };
    let (inputs, in_pos) = inputs.unwrap_or((Vec::new(), start));
    let (outputs, out_pos) = outputs.unwrap_or((Vec::new(), start));
    if inputs.is_empty() {
        return err(in_pos, "specification declares no input signal");
    }
    if outputs.is_empty() {
        return err(out_pos, "specification declares no output signal");
    }
    let mut names = BTreeMap::new();
    for (k, (name, pos)) in inputs.iter().chain(&outputs).enumerate() {
        if names.insert(name.clone(), k).is_some() {
            return err(*pos, format!("signal `{name}` declared twice"));
        }
        if name == "true" || name == "false" {
            return err(*pos, format!("`{name}` cannot be used as a signal name"));
        }
    }
    let signals: Vec<String> = inputs
        .iter()
        .chain(&outputs)
        .map(|(n, _)| n.clone())
        .collect();

    let mut env_safety = Vec::new();
    let mut sys_safety = Vec::new();
    let mut env_fair = Vec::new();
    let mut sys_fair = Vec::new();
    for st in &stmts {
        match st.key.as_str() {
            "inputs" | "outputs" => {}
            "env_safety_inv" | "sys_safety_inv" => {
                let phi = parse_whole_expr(&st.body, st.end, &names)?;
                let aut = invariant_to_automaton(&phi);
                if st.key.starts_with("env") {
                    env_safety.push(aut);
                } else {
                    sys_safety.push(aut);
                }
            }
            "env_fair" | "sys_fair" => {
                let e = parse_whole_expr(&st.body, st.end, &names)?;
                if e.has_next() {
                    return err(
                        st.key_pos,
                        "fairness formulas cannot use next-step references",
                    );
                }
                if st.key.starts_with("env") {
                    env_fair.push(e);
                } else {
                    sys_fair.push(e);
                }
            }
            _ => {
                let aut = parse_automaton(st, &names, &signals)?;
                if st.key.starts_with("env") {
                    env_safety.push(aut);
                } else {
                    sys_safety.push(aut);
                }
            }
        }
    }
    let strip = |v: Vec<(String, Pos)>| v.into_iter().map(|(n, _)| n).collect();
    Gr1Spec::new(
        strip(inputs),
        strip(outputs),
        env_safety,
        sys_safety,
        env_fair,
        sys_fair,
    )
    .or_else(|e| {
        let role = match &e {
            SpecError::UndeclaredSignal { role, .. }
            | SpecError::NextInFairness { role, .. }
            | SpecError::Automaton { role, .. } => Some(*role),
            _ => None,
        };
        let pos = role
            .and_then(|r| {
                let prefix = if r == Role::Env { "env" } else { "sys" };
                stmts
                    .iter()
                    .find(|s| s.key.starts_with(prefix))
                    .map(|s| s.key_pos)
            })
            .unwrap_or(start);
        err(pos, e.to_string())
    })
}

/// Renders `spec` in the text format. Safety parts are written as explicit
/// automata, so `parse_spec(&print_spec(s))` has the semantics of `s`.
pub fn print_spec(spec: &Gr1Spec) -> String {
    let names = spec.signal_names();
    let mut out = String::new();
    let _ = writeln!(out, "inputs: {}", spec.inputs().join(" "));
    let _ = writeln!(out, "outputs: {}", spec.outputs().join(" "));
    for role in [Role::Env, Role::Sys] {
        for aut in spec.safety(role) {
            let _ = writeln!(out, "{role}_safety_automaton:");
            let _ = writeln!(out, "  states: {}", aut.states().join(" "));
            let _ = writeln!(out, "  init: {}", aut.states()[aut.initial()]);
            for t in aut.transitions() {
                let _ = writeln!(
                    out,
                    "  trans: {} -({})-> {}",
                    aut.states()[t.from],
                    t.guard.display(&names),
                    aut.states()[t.to]
                );
            }
        }
    }
    for role in [Role::Env, Role::Sys] {
        for e in spec.fair(role) {
            let _ = writeln!(out, "{role}_fair: {}", e.display(&names));
        }
    }
    out
}
