//! Verilog and Graphviz renderings of machines and games.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::expr::{format_valuation, lex_valuations};
use crate::game::{ceil_log2, Game, StateKind};
use crate::strategy::MealyMachine;

const VERILOG_KEYWORDS: &[&str] = &[
    "always",
    "and",
    "assign",
    "begin",
    "buf",
    "case",
    "casex",
    "casez",
    "default",
    "else",
    "end",
    "endcase",
    "endfunction",
    "endmodule",
    "for",
    "function",
    "if",
    "initial",
    "inout",
    "input",
    "integer",
    "module",
    "nand",
    "negedge",
    "nor",
    "not",
    "or",
    "output",
    "parameter",
    "posedge",
    "reg",
    "wire",
    "xnor",
    "xor",
];

/// Names used by the emitted module itself.
const RESERVED: &[&str] = &["clk", "rst", "state", "next_state"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmitError {
    InvalidIdentifier(String),
    /// A signal name collides with a port or register of the module.
    ReservedName(String),
}

impl fmt::Display for EmitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmitError::InvalidIdentifier(s) => write!(f, "`{s}` is not a valid Verilog identifier"),
            EmitError::ReservedName(s) => write!(f, "signal name `{s}` is reserved by the emitter"),
        }
    }
}

impl core::error::Error for EmitError {}

pub fn is_verilog_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
        && !VERILOG_KEYWORDS.contains(&s)
}

fn binary(v: u64, width: usize) -> String {
    (0..width)
        .rev()
        .map(|k| if v >> k & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// `v` over `count` signals with the first signal leftmost.
fn signal_bits(v: u64, count: usize) -> String {
    (0..count)
        .map(|k| if v >> k & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Renders `mach` as a synchronous Verilog module with a behavioral case
/// table over `{state, inputs}`. Without more than one state the state
/// register is omitted.
pub fn emit_verilog(mach: &MealyMachine, name: &str) -> Result<String, EmitError> {
    if !is_verilog_identifier(name) {
        return Err(EmitError::InvalidIdentifier(name.into()));
    }
    for sig in mach.inputs().iter().chain(mach.outputs()) {
        if !is_verilog_identifier(sig) {
            return Err(EmitError::InvalidIdentifier(sig.clone()));
        }
        if RESERVED.contains(&sig.as_str()) || sig == name {
            return Err(EmitError::ReservedName(sig.clone()));
        }
    }
    let ni = mach.inputs().len();
    let no = mach.outputs().len();
    let width = ceil_log2(mach.num_states() as u64) as usize;
    let outs = mach.outputs().join(", ");
    let ins = mach.inputs().join(", ");

    let mut v = String::new();
    let _ = writeln!(v, "module {name} (");
    let _ = writeln!(v, "  input clk,");
    let _ = writeln!(v, "  input rst,");
    for i in mach.inputs() {
        let _ = writeln!(v, "  input {i},");
    }
    for (k, o) in mach.outputs().iter().enumerate() {
        let sep = if k + 1 == no { "" } else { "," };
        let _ = writeln!(v, "  output reg {o}{sep}");
    }
    let _ = writeln!(v, ");");
    if width > 0 {
        let _ = writeln!(v, "  reg [{}:0] state;", width - 1);
        let _ = writeln!(v, "  reg [{}:0] next_state;", width - 1);
    }
    let _ = writeln!(v, "  always @(*) begin");
    if width > 0 {
        let _ = writeln!(v, "    case ({{state, {ins}}})");
    } else {
        let _ = writeln!(v, "    case ({{{ins}}})");
    }
    let label_width = width + ni;
    for q in 0..mach.num_states() {
        for input in lex_valuations(ni, 0) {
            let t = mach.transition(q, input);
            let label = format!("{}{}", binary(q as u64, width), signal_bits(input, ni));
            let _ = write!(v, "      {label_width}'b{label}: begin ");
            if width > 0 {
                let _ = write!(v, "next_state = {width}'d{}; ", t.next);
            }
            let _ = writeln!(v, "{{{outs}}} = {no}'b{}; end", signal_bits(t.output, no));
        }
    }
    let _ = write!(v, "      default: begin ");
    if width > 0 {
        let _ = write!(v, "next_state = state; ");
    }
    let _ = writeln!(v, "{{{outs}}} = {no}'b{}; end", "0".repeat(no));
    let _ = writeln!(v, "    endcase");
    let _ = writeln!(v, "  end");
    if width > 0 {
        let _ = writeln!(v, "  always @(posedge clk) begin");
        let _ = writeln!(v, "    if (rst) state <= {width}'d{};", mach.initial());
        let _ = writeln!(v, "    else state <= next_state;");
        let _ = writeln!(v, "  end");
    }
    let _ = writeln!(v, "endmodule");
    Ok(v)
}

/// Number of lines in emitted text.
pub fn line_count(text: &str) -> usize {
    text.lines().count()
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering of a machine. Edges into states with a system error
/// are dashed red; states with an environment error are filled.
pub fn emit_dot(mach: &MealyMachine, name: &str) -> String {
    let mut d = String::new();
    let _ = writeln!(d, "digraph \"{}\" {{", dot_escape(name));
    let _ = writeln!(d, "  rankdir=LR;");
    let _ = writeln!(d, "  node [shape=circle];");
    let _ = writeln!(d, "  init [shape=point];");
    let _ = writeln!(d, "  init -> q{};", mach.initial());
    let bad_sys = |q: u32| {
        mach.states()[q as usize]
            .annotation
            .is_some_and(|a| !a.ok_s)
    };
    for (q, st) in mach.states().iter().enumerate() {
        let mut label = format!("q{q}");
        if let Some(s) = st.game_state {
            let _ = write!(label, "\\ns{s} m={}", st.memory);
        }
        if let Some(a) = st.annotation {
            let _ = write!(label, "\\nx={} y={}", a.x, a.y);
        }
        let fill = if st.annotation.is_some_and(|a| !a.ok_e) {
            ", style=filled, fillcolor=lightgray"
        } else {
            ""
        };
        let _ = writeln!(d, "  q{q} [label=\"{label}\"{fill}];");
    }
    for q in 0..mach.num_states() {
        for input in lex_valuations(mach.inputs().len(), 0) {
            let t = mach.transition(q, input);
            let label = format!(
                "{} / {}",
                format_valuation(input, mach.inputs()),
                format_valuation(t.output, mach.outputs())
            );
            let style = if bad_sys(t.next) {
                ", style=dashed, color=red"
            } else {
                ""
            };
            let _ = writeln!(
                d,
                "  q{q} -> q{} [label=\"{}\"{style}];",
                t.next,
                dot_escape(&label)
            );
        }
    }
    let _ = writeln!(d, "}}");
    d
}

fn kind_label(kind: &StateKind, info: Option<&crate::game::SpecInfo>) -> String {
    match kind {
        StateKind::Regular(g) => {
            let name = |names: Option<&Vec<String>>, q: u32| {
                names
                    .and_then(|n| n.get(q as usize).cloned())
                    .unwrap_or_else(|| format!("{q}"))
            };
            format!(
                "{} | {}\\nx={} y={}",
                name(info.map(|i| &i.env_states), g.qe),
                name(info.map(|i| &i.sys_states), g.qs),
                g.x,
                g.y
            )
        }
        StateKind::WinSink => "WIN".into(),
        StateKind::LoseSink => "LOSE".into(),
        StateKind::Abstract => String::new(),
    }
}

/// Graphviz rendering of a game: one edge per state, input and distinct
/// successor, optionally highlighting a state set.
pub fn emit_game_dot(
    g: &Game,
    name: &str,
    highlight: Option<&crate::stateset::StateSet>,
) -> String {
    let mut d = String::new();
    let _ = writeln!(d, "digraph \"{}\" {{", dot_escape(name));
    let _ = writeln!(d, "  node [shape=box];");
    let _ = writeln!(d, "  init [shape=point];");
    let _ = writeln!(d, "  init -> s{};", g.initial());
    for s in 0..g.num_states() {
        let kind = g.kind(s);
        let mut attrs = Vec::new();
        if highlight.is_some_and(|h| h.contains(s)) {
            attrs.push("penwidth=2");
        }
        if !kind.ok_e() {
            attrs.push("style=filled, fillcolor=lightgray");
        }
        if !kind.ok_s() {
            attrs.push("color=red");
        }
        let extra = attrs.iter().fold(String::new(), |mut acc, a| {
            acc.push_str(", ");
            acc.push_str(a);
            acc
        });
        let body = kind_label(kind, g.info());
        let label = if body.is_empty() {
            format!("s{s}")
        } else {
            format!("s{s}\\n{body}")
        };
        let _ = writeln!(d, "  s{s} [label=\"{label}\"{extra}];");
    }
    for s in 0..g.num_states() {
        for input in lex_valuations(g.inputs().len(), 0) {
            for &t in g.successors(s, input) {
                let _ = writeln!(
                    d,
                    "  s{s} -> s{t} [label=\"{}\"];",
                    format_valuation(input, g.inputs())
                );
            }
        }
    }
    let _ = writeln!(d, "}}");
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{MachineState, MachineTransition};
    use alloc::string::ToString;
    use alloc::vec;

    fn echo() -> MealyMachine {
        let t = |o| MachineTransition {
            output: o,
            env_recover: None,
            sys_recover: None,
            next: 0,
            row: None,
        };
        MealyMachine::new(
            vec!["i".to_string()],
            vec!["o".to_string()],
            vec![MachineState {
                game_state: None,
                memory: 0,
                annotation: None,
            }],
            0,
            vec![t(0), t(1)],
        )
        .unwrap()
    }

    #[test]
    fn echo_golden() {
        let v = emit_verilog(&echo(), "echo").unwrap();
        let expected = "module echo (
  input clk,
  input rst,
  input i,
  output reg o
);
  always @(*) begin
    case ({i})
      1'b0: begin {o} = 1'b0; end
      1'b1: begin {o} = 1'b1; end
      default: begin {o} = 1'b0; end
    endcase
  end
endmodule
";
        assert_eq!(v, expected);
        assert_eq!(line_count(&v), 14);
    }

    #[test]
    fn rejects_bad_names() {
        assert_eq!(
            emit_verilog(&echo(), "3x"),
            Err(EmitError::InvalidIdentifier("3x".into()))
        );
        assert_eq!(
            emit_verilog(&echo(), "module"),
            Err(EmitError::InvalidIdentifier("module".into()))
        );
        assert!(is_verilog_identifier("g_1$"));
        assert!(!is_verilog_identifier("a-b"));
    }

    #[test]
    fn dot_mentions_every_edge() {
        let d = emit_dot(&echo(), "echo");
        assert_eq!(d.matches("q0 -> q0").count(), 2);
        assert!(d.contains("i=1 / o=1"));
    }
}
