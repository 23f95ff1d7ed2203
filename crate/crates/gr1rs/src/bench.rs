//! Benchmark specifications and the size/time table.

use std::fmt::Write;
use std::time::Duration;

use gr1_core::emit::line_count;
use gr1_core::game::BuildMode;

use crate::pipeline::{synthesize, PipelineError};
use crate::spec_format::parse_spec;

/// The N-client arbiter: requests are pairwise exclusive, grants are
/// pairwise exclusive, and a request is granted in the next step.
pub fn arbiter_spec(n: usize) -> Result<String, String> {
    if n < 2 {
        return Err(format!("the arbiter needs at least 2 clients, got {n}"));
    }
    let mut s = String::new();
    let list = |p: &str| {
        (1..=n)
            .map(|k| format!("{p}{k}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "# {n}-client arbiter");
    let _ = writeln!(s, "inputs: {}", list("r"));
    let _ = writeln!(s, "outputs: {}", list("g"));
    for i in 1..=n {
        for j in i + 1..=n {
            let _ = writeln!(s, "env_safety_inv: !(r{i} & r{j})");
        }
    }
    for i in 1..=n {
        for j in i + 1..=n {
            let _ = writeln!(s, "sys_safety_inv: !(g{i} & g{j})");
        }
    }
    for i in 1..=n {
        let _ = writeln!(s, "sys_safety_inv: r{i} -> X(g{i})");
    }
    Ok(s)
}

/// Full handshake between a request `r` and a grant `g`.
pub const HANDSHAKE_SPEC: &str = "\
# full handshake
inputs: r
outputs: g
env_safety_inv: (r & !g -> X(r)) & (!r & g -> X(!r))
env_fair: !r | !g
sys_safety_inv: (!r & !g -> X(!g)) & (r & g -> X(g))
sys_fair: (r & g) | (!r & !g)
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchSpec {
    Arbiter(usize),
    Handshake,
}

impl BenchSpec {
    /// Value of the `N` column; the handshake has one request line.
    pub fn n(&self) -> usize {
        match self {
            BenchSpec::Arbiter(n) => *n,
            BenchSpec::Handshake => 1,
        }
    }

    pub fn text(&self) -> Result<String, String> {
        match self {
            BenchSpec::Arbiter(n) => arbiter_spec(*n),
            BenchSpec::Handshake => Ok(HANDSHAKE_SPEC.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub mode: BuildMode,
    pub states: usize,
    pub realizable: bool,
    pub verilog_lines: usize,
    pub solve_ms: f64,
    pub total_ms: f64,
}

pub const CSV_HEADER: &str = "N,mode,states,verilog_lines,solve_ms,total_ms";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:.3},{:.3}",
            self.n, self.mode, self.states, self.verilog_lines, self.solve_ms, self.total_ms
        )
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Synthesizes `spec` `reps` times and reports the fastest run.
pub fn bench_row(
    spec: BenchSpec,
    mode: BuildMode,
    state_cap: usize,
    reps: usize,
) -> Result<BenchRow, String> {
    let text = spec.text()?;
    let parsed = parse_spec(&text).map_err(|e| e.to_string())?;
    let mut best: Option<BenchRow> = None;
    for _ in 0..reps.max(1) {
        let syn = synthesize(&parsed, mode, state_cap, "arbiter")
            .map_err(|e: PipelineError| e.to_string())?;
        let row = BenchRow {
            n: spec.n(),
            mode,
            states: syn.game.num_states(),
            realizable: syn.realizable(),
            verilog_lines: syn.emitted().map_or(0, |e| line_count(&e.verilog)),
            solve_ms: ms(syn.timings.solve),
            total_ms: ms(syn.timings.total()),
        };
        best = Some(match best {
            Some(b) => BenchRow {
                solve_ms: b.solve_ms.min(row.solve_ms),
                total_ms: b.total_ms.min(row.total_ms),
                ..b
            },
            None => row,
        });
    }
    Ok(best.expect("at least one repetition"))
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}
