//! Interprets the emitted Verilog case table and runs it against the
//! machine it came from.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use gr1_core::game::{BuildMode, DEFAULT_STATE_CAP};
use gr1rs::pipeline::synthesize;
use gr1rs::spec_format::parse_spec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Netlist {
    /// Concatenation order of the case selector after `state`.
    inputs: Vec<String>,
    outputs: Vec<String>,
    reset: u64,
    /// Selector bits to (next state, output bits).
    table: HashMap<String, (u64, String)>,
}

fn sized_literal(text: &str) -> (u64, String) {
    let (_, rest) = text.split_once('\'').expect("sized literal");
    let (radix, digits) = rest.split_at(1);
    let value = match radix {
        "d" => digits.parse().unwrap(),
        "b" => u64::from_str_radix(digits, 2).unwrap(),
        other => panic!("radix {other}"),
    };
    (value, digits.to_string())
}

fn parse_netlist(v: &str) -> Netlist {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut reset = 0;
    let mut table = HashMap::new();
    for line in v.lines().map(str::trim) {
        if let Some(sel) = line
            .strip_prefix("case ({")
            .and_then(|l| l.strip_suffix("})"))
        {
            inputs = sel
                .split(", ")
                .filter(|s| *s != "state")
                .map(String::from)
                .collect();
        } else if let Some(lit) = line.strip_prefix("if (rst) state <= ") {
            reset = sized_literal(lit.trim_end_matches(';')).0;
        } else if line.contains(": begin next_state = ") && !line.starts_with("default") {
            let (sel, body) = line.split_once(": begin next_state = ").unwrap();
            let (next, rest) = body.split_once("; {").unwrap();
            let (outs, lit) = rest.split_once("} = ").unwrap();
            outputs = outs.split(", ").map(String::from).collect();
            let bits = sized_literal(lit.trim_end_matches("; end")).1;
            let key = sized_literal(sel).1;
            table.insert(key, (sized_literal(next).0, bits));
        }
    }
    Netlist {
        inputs,
        outputs,
        reset,
        table,
    }
}

fn check(spec_file: &str, mode: BuildMode) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(spec_file);
    let spec = parse_spec(&fs::read_to_string(path).unwrap()).unwrap();
    let syn = synthesize(&spec, mode, DEFAULT_STATE_CAP, "dut").unwrap();
    let e = syn.emitted().expect("realizable");
    let m = &e.machine;
    let net = parse_netlist(&e.verilog);
    assert_eq!(net.inputs, m.inputs());
    assert_eq!(net.outputs, m.outputs());
    assert_eq!(net.table.len(), m.num_states() << m.inputs().len());

    let width = m.num_states().next_power_of_two().trailing_zeros() as usize;
    let ni = m.inputs().len();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut hw, mut q) = (net.reset, m.initial() as usize);
    for _ in 0..10_000 {
        let input: u64 = rng.gen_range(0..1 << ni);
        // the machine stores the first signal in bit 0; the netlist puts it leftmost
        let in_bits: String = (0..ni)
            .map(|j| if input >> j & 1 == 1 { '1' } else { '0' })
            .collect();
        let key = format!("{:0width$b}{in_bits}", hw, width = width);
        let (next, out_bits) = &net.table[&key];
        let t = m.transition(q, input);
        let want: String = (0..m.outputs().len())
            .map(|j| if t.output >> j & 1 == 1 { '1' } else { '0' })
            .collect();
        assert_eq!(*out_bits, want, "output at state {q} input {input}");
        assert_eq!(*next, t.next as u64);
        hw = *next;
        q = t.next as usize;
    }
}

#[test]
fn arbiter_netlist_matches_machine() {
    check("arbiter2.spec", BuildMode::Robust);
    check("arbiter2.spec", BuildMode::Plain);
}

#[test]
fn handshake_netlist_matches_machine() {
    check("handshake.spec", BuildMode::Robust);
    check("handshake.spec", BuildMode::Plain);
}
